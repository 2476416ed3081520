#ifndef CRNF_TRACE_HPP
#define CRNF_TRACE_HPP

#include <map>
#include <numeric>
#include <vector>

#include "series.hpp"
#include "series_matrix.hpp"

namespace crnf {

struct DegenerateFormError : std::runtime_error {
    explicit DegenerateFormError(const std::string& m) : std::runtime_error(m) {}
};

inline bool cmat_is_hermitian(const CMat& m) {
    int n = int(m.size());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (m[i][j] != m[j][i].conj()) return false;
    return true;
}

/// Result of exact congruence diagonalization of a hermitian matrix.
struct HermDiag {
    std::vector<Rat> diag;   // real diagonal values after congruence, negatives first
    int negatives = 0;       // signature s
    int rank = 0;
    CMat basis;              // columns b_j with (B^* M B) diagonal
};

/// Symmetric Gaussian elimination with the deterministic pivot rule: first
/// nonzero diagonal entry, else first nonzero off-diagonal pair.
inline HermDiag herm_diagonalize(const CMat& m) {
    int n = int(m.size());
    if (!cmat_is_hermitian(m)) throw DegenerateFormError("matrix is not hermitian");
    CMat basis = cmat_identity(n);
    auto gram = [&](int r, int c) {
        CRat acc;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) acc += basis[i][r].conj() * m[i][j] * basis[j][c];
        return acc;
    };
    for (int i = 0; i < n; ++i) {
        int piv = -1;
        for (int r = i; r < n; ++r)
            if (!gram(r, r).is_zero()) {
                piv = r;
                break;
            }
        if (piv < 0) {
            int pr = -1, pc = -1;
            for (int r = i; r < n && pr < 0; ++r)
                for (int c = r + 1; c < n; ++c)
                    if (!gram(r, c).is_zero()) {
                        pr = r;
                        pc = c;
                        break;
                    }
            if (pr < 0) break;  // remaining block is zero
            CRat t = gram(pr, pc);
            CRat lambda = sgn(t.re) != 0 ? CRat(1) : crat_i();
            for (int k = 0; k < n; ++k) basis[k][pr] += lambda * basis[k][pc];
            piv = pr;
        }
        if (piv != i)
            for (int k = 0; k < n; ++k) std::swap(basis[k][piv], basis[k][i]);
        CRat d = gram(i, i);
        for (int c = i + 1; c < n; ++c) {
            CRat g = gram(i, c);
            if (g.is_zero()) continue;
            CRat f = g / d;
            for (int k = 0; k < n; ++k) basis[k][c] -= f * basis[k][i];
        }
    }
    HermDiag out;
    out.basis = basis;
    std::vector<Rat> diag;
    for (int i = 0; i < n; ++i) {
        CRat d = gram(i, i);
        if (sgn(d.im) != 0) throw DegenerateFormError("non-real diagonal in hermitian reduction");
        diag.push_back(d.re);
    }
    for (const auto& d : diag) {
        if (sgn(d) < 0) ++out.negatives;
        if (sgn(d) != 0) ++out.rank;
    }
    // negatives first, zeros last
    std::sort(diag.begin(), diag.end(), [](const Rat& a, const Rat& b) {
        auto cls = [](const Rat& x) { return sgn(x) < 0 ? 0 : (sgn(x) > 0 ? 1 : 2); };
        if (cls(a) != cls(b)) return cls(a) < cls(b);
        return a < b;
    });
    out.diag = std::move(diag);
    return out;
}

/// Trace operator associated with an invertible hermitian matrix (c_jk):
/// tr = sum c^{jk} d^2/dzbar_j dz_k. The truncation weight drops by 2.
class TraceOp {
  public:
    TraceOp(Dims dims, const CMat& herm) : dims_(dims) {
        if (int(herm.size()) != dims.n) throw ShapeError("trace matrix must be n x n");
        if (!cmat_is_hermitian(herm)) throw DegenerateFormError("trace form not hermitian");
        inv_ = cmat_inverse(herm);  // throws SingularMatrixError when degenerate
    }

    Series operator()(const Series& s) const {
        Series acc(dims_, std::max(s.bound() - 2, -1));
        for (int j = 0; j < dims_.n; ++j)
            for (int k = 0; k < dims_.n; ++k) {
                if (inv_[j][k].is_zero()) continue;
                Series d = differentiate(differentiate(s, var_zbar(dims_, j)), var_z(dims_, k));
                acc = acc + d.scaled(inv_[j][k]);
            }
        return acc;
    }

    Series power(const Series& s, int l) const {
        Series r = s;
        for (int i = 0; i < l; ++i) r = (*this)(r);
        return r;
    }

  private:
    Dims dims_;
    CMat inv_;
};

/// Reads the hermitian coefficient matrix of a bidegree-(1,1) form: accepts a
/// hermitian-coefficient series or i times one (the shape of the restricted
/// structure form) and returns the hermitian matrix.
inline CMat herm_matrix_of_form(const Series& q_form) {
    const Dims& dims = q_form.dims();
    CMat c = cmat_zero(dims.n, dims.n);
    for (const auto& t : q_form.terms()) {
        if (mono_deg_z(dims, t.m) != 1 || mono_deg_zbar(dims, t.m) != 1 || mono_deg_u(dims, t.m) != 0)
            throw DegenerateFormError("form is not bidegree (1,1)");
        int zj = -1, bj = -1;
        for (int j = 0; j < dims.n; ++j) {
            if (mono_exp(t.m, var_z(dims, j)) == 1) zj = j;
            if (mono_exp(t.m, var_zbar(dims, j)) == 1) bj = j;
        }
        c[bj][zj] = t.c;
    }
    if (cmat_is_hermitian(c)) return c;
    CMat h = c;
    for (auto& row : h)
        for (auto& v : row) v = v * CRat(Rat(0), Rat(-1));  // h = c / i
    if (cmat_is_hermitian(h)) return h;
    throw DegenerateFormError("form coefficient matrix is neither hermitian nor i-hermitian");
}

/// Unique decomposition p = q * q_form^l + h with tr^l h = 0, computed
/// bidegree-by-bidegree with an exact linear solve. q_form must be a
/// nondegenerate bidegree-(1,1) form.
inline std::pair<Series, Series> trace_decompose(const Series& p, int l, const Series& q_form,
                                                 unsigned perm_seed = 0) {
    const Dims dims = p.dims();
    if (l < 1) throw std::invalid_argument("l must be positive");
    TraceOp tr(dims, herm_matrix_of_form(q_form));

    Series form_l = Series::constant(dims, kInfBound, CRat(1));
    for (int i = 0; i < l; ++i) form_l = mul(form_l, q_form);

    // group terms of p by (|a|, |b|, u-part)
    std::map<std::tuple<int, int, Mono>, std::vector<Term>> blocks;
    for (const auto& t : p.terms()) {
        Mono upart = kMonoOne;
        for (int k = 0; k < dims.d; ++k)
            upart = mono_set_exp(upart, var_u(dims, k), mono_exp(t.m, var_u(dims, k)));
        blocks[{mono_deg_z(dims, t.m), mono_deg_zbar(dims, t.m), upart}].push_back(t);
    }

    Series q(dims, p.bound()), h(dims, p.bound());
    for (auto& [key, terms] : blocks) {
        auto [a, b, upart] = key;
        Series pblock = Series::from_terms(dims, p.bound(), terms);
        if (a < l || b < l) {
            h = h + pblock;
            continue;
        }
        // basis of bidegree (a-l, b-l) monomials over the same u-part
        std::vector<Mono> basis;
        std::vector<Mono> za = monomials_of_bidegree(dims, a - l, b - l);
        basis.reserve(za.size());
        for (Mono m : za) basis.push_back(mono_mul(m, upart));
        if (perm_seed != 0) {
            std::vector<Mono> shuffled = basis;
            unsigned s = perm_seed;
            for (std::size_t i = shuffled.size(); i > 1; --i) {
                s = s * 1664525u + 1013904223u;
                std::swap(shuffled[i - 1], shuffled[(s >> 8) % i]);
            }
            basis = shuffled;
        }
        int mdim = int(basis.size());
        // target coordinates: tr^l image block monomials
        std::vector<Mono> target = basis;  // same bidegree pattern
        std::sort(target.begin(), target.end(),
                  [&](Mono x, Mono y) { return mono_less(dims, x, y); });
        CMat mat = cmat_zero(mdim, mdim);
        for (int j = 0; j < mdim; ++j) {
            Series bj = Series::monomial(dims, p.bound() + 2 * l, basis[j], CRat(1));
            Series img = tr.power(mul(bj, form_l), l);
            for (int i = 0; i < mdim; ++i) mat[i][j] = img.coeff(target[i]);
        }
        Series rhs_series = tr.power(pblock.with_bound(p.bound() + 2 * l), l);
        std::vector<CRat> rhs(mdim);
        for (int i = 0; i < mdim; ++i) rhs[i] = rhs_series.coeff(target[i]);
        std::vector<CRat> sol = cmat_solve(mat, rhs);
        std::vector<Term> qterms;
        for (int j = 0; j < mdim; ++j) qterms.push_back({basis[j], sol[j]});
        Series qblock = Series::from_terms(dims, p.bound(), qterms);
        q = q + qblock;
        h = h + (pblock - mul(qblock, form_l, p.bound()));
    }
    return {q, h};
}

}  // namespace crnf

#endif
