#ifndef CRNF_TRANSFORM_HPP
#define CRNF_TRANSFORM_HPP

#include <vector>

#include "structure.hpp"

namespace crnf {

/// Formal coordinate change z' = z + f(z, zbar, u), u' = u + g(z, zbar, u)
/// with f, g of order >= 2 and g real. Components are exact polynomials.
struct Transform {
    Dims dims;
    std::vector<Series> f;  // n complex components
    std::vector<Series> g;  // d real components

    Transform() = default;

    static Transform identity(Dims dims) {
        Transform t;
        t.dims = dims;
        for (int j = 0; j < dims.n; ++j) t.f.push_back(Series::zero(dims, kInfBound));
        for (int k = 0; k < dims.d; ++k) t.g.push_back(Series::zero(dims, kInfBound));
        return t;
    }

    static Transform make(std::vector<Series> f, std::vector<Series> g) {
        Transform t;
        if (f.empty() || g.empty()) throw ShapeError("transform needs n f-components and d g-components");
        t.dims = f[0].dims();
        if (int(f.size()) != t.dims.n || int(g.size()) != t.dims.d)
            throw ShapeError("transform component count mismatch");
        for (const auto& s : f) {
            if (s.dims() != t.dims) throw ShapeError("transform dimension mismatch");
            check_low_order(s);
        }
        for (const auto& s : g) {
            if (s.dims() != t.dims) throw ShapeError("transform dimension mismatch");
            check_low_order(s);
            if (!is_real(s)) throw PreconditionError("g components must be real");
        }
        t.f = std::move(f);
        t.g = std::move(g);
        return t;
    }

    bool is_identity() const {
        for (const auto& s : f)
            if (!s.is_zero()) return false;
        for (const auto& s : g)
            if (!s.is_zero()) return false;
        return true;
    }

    /// The substitution map id + (f, fbar, g) in lane order.
    Subst map(int bound = kInfBound) const {
        Subst h;
        h.reserve(dims.vars());
        for (int j = 0; j < dims.n; ++j)
            h.push_back(Series::variable(dims, bound, var_z(dims, j)) + f[j]);
        for (int j = 0; j < dims.n; ++j)
            h.push_back(Series::variable(dims, bound, var_zbar(dims, j)) + conjugate(f[j]));
        for (int k = 0; k < dims.d; ++k)
            h.push_back(Series::variable(dims, bound, var_u(dims, k)) + g[k]);
        return h;
    }

    friend bool operator==(const Transform& a, const Transform& b) {
        return a.dims == b.dims && a.f == b.f && a.g == b.g;
    }

  private:
    static void check_low_order(const Series& s) {
        for (const auto& t : s.terms())
            if (mono_order(s.dims(), t.m) < 2)
                throw PreconditionError("transform components must have order >= 2");
    }
};

/// (id + (f2, g2)) o (id + (f1, g1)) as a single transform.
inline Transform compose_transforms(const Transform& t1, const Transform& t2, int cap = kInfBound) {
    if (t1.dims != t2.dims) throw ShapeError("dimension mismatch");
    const Dims& dims = t1.dims;
    Subst h1 = t1.map();
    std::vector<Series> f, g;
    for (int j = 0; j < dims.n; ++j) f.push_back(t1.f[j] + compose(t2.f[j], h1, cap));
    for (int k = 0; k < dims.d; ++k) g.push_back(t1.g[k] + compose(t2.g[k], h1, cap));
    return Transform::make(std::move(f), std::move(g));
}

/// Exact pushforward of L through h = id + (f, g) via the basic identities:
/// solve (L' o h) A = B for both component rows, then recoordinate with the
/// reverse map. Exact up to the structure's tracked weight.
inline AlmostCR pushforward(const AlmostCR& s, const Transform& t) {
    if (s.dims != t.dims) throw ShapeError("dimension mismatch");
    const Dims& dims = s.dims;
    const int n = dims.n, d = dims.d;
    const int cap = s.bound();

    if (t.is_identity()) return s;

    std::vector<Series> fbar;
    fbar.reserve(n);
    for (int j = 0; j < n; ++j) fbar.push_back(conjugate(t.f[j]));

    auto deriv_mat = [&](const std::vector<Series>& comp, int rows, bool zvars, bool zbvars) {
        // rows x n or rows x d matrix of derivatives of comp
        int cols = zvars || zbvars ? n : d;
        SeriesMat m(dims, kInfBound, rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int c = 0; c < cols; ++c)
                m.at(i, c) = differentiate(comp[i],
                                           zvars ? var_z(dims, c) : (zbvars ? var_zbar(dims, c) : var_u(dims, c)));
        return m;
    };

    SeriesMat f_z = deriv_mat(t.f, n, true, false);
    SeriesMat f_zb = deriv_mat(t.f, n, false, true);
    SeriesMat f_u = deriv_mat(t.f, n, false, false);
    SeriesMat fb_z = deriv_mat(fbar, n, true, false);
    SeriesMat fb_zb = deriv_mat(fbar, n, false, true);
    SeriesMat fb_u = deriv_mat(fbar, n, false, false);
    SeriesMat g_z = deriv_mat(t.g, d, true, false);
    SeriesMat g_zb = deriv_mat(t.g, d, false, true);
    SeriesMat g_u = deriv_mat(t.g, d, false, false);

    // A = id + f_z + f_zb Lzbar + f_u Lw
    SeriesMat A = SeriesMat::identity(dims, kInfBound, n) + f_z + mat_mul(f_zb, s.Lzbar, cap) +
                  mat_mul(f_u, s.Lw, cap);
    // Bw = g_z + g_zb Lzbar + (id + g_u) Lw
    SeriesMat Bw = g_z + mat_mul(g_zb, s.Lzbar, cap) + s.Lw + mat_mul(g_u, s.Lw, cap);
    // Bz = fbar_z + (id + fbar_zb) Lzbar + fbar_u Lw
    SeriesMat Bz = fb_z + s.Lzbar + mat_mul(fb_zb, s.Lzbar, cap) + mat_mul(fb_u, s.Lw, cap);

    SeriesMat A_inv = invert_series_matrix(A, cap);  // constant term is id
    SeriesMat Cw = mat_mul(Bw, A_inv, cap);          // = L'^w o h
    SeriesMat Cz = mat_mul(Bz, A_inv, cap);          // = L'^zbar o h

    Subst hinv = reverse_map(t.map(), cap);
    SeriesMat lw = Cw.compose_all(hinv, cap);
    SeriesMat lzb = Cz.compose_all(hinv, cap);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) lzb.at(i, j) = lzb.at(i, j).with_bound(cap);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < n; ++j) lw.at(i, j) = lw.at(i, j).with_bound(cap);
    return AlmostCR(dims, lzb, lw);
}

}  // namespace crnf

#endif
