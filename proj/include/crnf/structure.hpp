#ifndef CRNF_STRUCTURE_HPP
#define CRNF_STRUCTURE_HPP

#include <optional>
#include <vector>

#include "linsolve.hpp"
#include "series_matrix.hpp"
#include "trace.hpp"

namespace crnf {

struct PreconditionError : std::runtime_error {
    explicit PreconditionError(const std::string& m) : std::runtime_error(m) {}
};

/// An almost CR structure of type (n, d) in normalized coordinates, stored as
/// the graph map L = (L^zbar, L^w): the (1,0) bundle at p is spanned by
/// vectors (xi, L^zbar(p) xi, L^w(p) xi). All entries vanish at 0.
struct AlmostCR {
    Dims dims;
    SeriesMat Lzbar;  // n x n
    SeriesMat Lw;     // d x n

    AlmostCR() = default;
    AlmostCR(Dims dm, SeriesMat lz, SeriesMat lw)
        : dims(dm), Lzbar(std::move(lz)), Lw(std::move(lw)) {
        check();
    }

    static AlmostCR flat(Dims dims, int bound) {
        return AlmostCR(dims, SeriesMat(dims, bound, dims.n, dims.n),
                        SeriesMat(dims, bound, dims.d, dims.n));
    }

    void check() const {
        if (Lzbar.rows() != dims.n || Lzbar.cols() != dims.n) throw ShapeError("Lzbar must be n x n");
        if (Lw.rows() != dims.d || Lw.cols() != dims.n) throw ShapeError("Lw must be d x n");
        for (int i = 0; i < dims.n; ++i)
            for (int j = 0; j < dims.n; ++j)
                if (Lzbar.at(i, j).has_constant_term()) throw PreconditionError("L(0) != 0");
        for (int i = 0; i < dims.d; ++i)
            for (int j = 0; j < dims.n; ++j)
                if (Lw.at(i, j).has_constant_term()) throw PreconditionError("L(0) != 0");
    }

    int bound() const { return std::min(Lzbar.min_bound(), Lw.min_bound()); }

    friend bool operator==(const AlmostCR& a, const AlmostCR& b) {
        return a.dims == b.dims && a.Lzbar == b.Lzbar && a.Lw == b.Lw;
    }
};

/// Structure induced on the graph Im w = phi(z, zbar, Re w):
/// L = (0, i (id - i phi_u)^{-1} phi_z). Each phi component must be real and
/// of order >= 2; the result is integrable. phi is the complete defining
/// polynomial of the graph, so the result is exact up to phi's weight bound.
inline AlmostCR from_graph(const std::vector<Series>& phi) {
    if (phi.empty()) throw ShapeError("phi must have d components");
    const Dims dims = phi[0].dims();
    if (int(phi.size()) != dims.d) throw ShapeError("phi must have d components");
    int bound = kInfBound;
    for (const auto& p : phi) {
        if (p.dims() != dims) throw ShapeError("phi dimension mismatch");
        if (!is_real(p)) throw PreconditionError("phi must be real");
        if (!p.is_zero() && p.ord() < 2) throw PreconditionError("phi must vanish to second order");
        bound = std::min(bound, p.bound());
    }
    SeriesMat phi_u(dims, bound, dims.d, dims.d);
    SeriesMat phi_z(dims, bound, dims.d, dims.n);
    for (int i = 0; i < dims.d; ++i) {
        Series pe = phi[i].with_bound(kInfBound);
        for (int k = 0; k < dims.d; ++k)
            phi_u.at(i, k) = differentiate(pe, var_u(dims, k)).truncated(bound).with_bound(bound);
        for (int j = 0; j < dims.n; ++j)
            phi_z.at(i, j) = differentiate(pe, var_z(dims, j)).truncated(bound).with_bound(bound);
    }
    const CRat mi = -crat_i();
    SeriesMat a(dims, bound, dims.d, dims.d);  // id - i phi_u
    for (int i = 0; i < dims.d; ++i)
        for (int k = 0; k < dims.d; ++k) {
            a.at(i, k) = phi_u.at(i, k).scaled(mi);
            if (i == k) a.at(i, k) = a.at(i, k) + Series::constant(dims, kInfBound, CRat(1));
        }
    SeriesMat lw = mat_mul(invert_series_matrix(a), phi_z);
    for (int i = 0; i < dims.d; ++i)
        for (int j = 0; j < dims.n; ++j) lw.at(i, j) = lw.at(i, j).scaled(crat_i());
    return AlmostCR(dims, SeriesMat(dims, bound, dims.n, dims.n), lw);
}

/// Euler restriction: component-wise contraction of the rows of L with e(z).
struct EulerRestriction {
    std::vector<Series> zbar;  // n entries
    std::vector<Series> w;     // d entries
};

inline EulerRestriction euler_restrict(const AlmostCR& s) {
    EulerRestriction r;
    const Dims& dims = s.dims;
    for (int i = 0; i < dims.n; ++i) {
        SeriesMat row(dims, s.Lzbar.min_bound(), 1, dims.n);
        for (int j = 0; j < dims.n; ++j) row.at(0, j) = s.Lzbar.at(i, j);
        r.zbar.push_back(euler_eval(row));
    }
    for (int i = 0; i < dims.d; ++i) {
        SeriesMat row(dims, s.Lw.min_bound(), 1, dims.n);
        for (int j = 0; j < dims.n; ++j) row.at(0, j) = s.Lw.at(i, j);
        r.w.push_back(euler_eval(row));
    }
    return r;
}

inline bool euler_coincide(const AlmostCR& a, const AlmostCR& b) {
    if (a.dims != b.dims) throw ShapeError("dimension mismatch");
    EulerRestriction ra = euler_restrict(a), rb = euler_restrict(b);
    int cap = kInfBound;
    for (const auto& s : ra.zbar) cap = std::min(cap, s.bound());
    for (const auto& s : rb.zbar) cap = std::min(cap, s.bound());
    for (const auto& s : ra.w) cap = std::min(cap, s.bound());
    for (const auto& s : rb.w) cap = std::min(cap, s.bound());
    for (std::size_t i = 0; i < ra.zbar.size(); ++i)
        if (ra.zbar[i].truncated(cap) != rb.zbar[i].truncated(cap)) return false;
    for (std::size_t i = 0; i < ra.w.size(); ++i)
        if (ra.w[i].truncated(cap) != rb.w[i].truncated(cap)) return false;
    return true;
}

/// Non-integrability residual N((e_j, L e_j), (e_k, L e_k)) for each basis
/// pair j < k, as an (n+d)-vector of series per pair. All residuals vanish
/// (up to weight bound - 1) iff the structure is formally integrable.
struct IntegrabilityResidual {
    // entry [pair-index] = components (n zbar-rows then d w-rows)
    std::vector<std::vector<Series>> pairs;
    std::vector<std::pair<int, int>> index;  // (j, k) per pair

    bool is_zero() const {
        for (const auto& p : pairs)
            for (const auto& s : p)
                if (!s.is_zero()) return false;
        return true;
    }
};

inline IntegrabilityResidual integrability_residual(const AlmostCR& s) {
    const Dims& dims = s.dims;
    const int n = dims.n, d = dims.d;

    // stack L as (n+d) x n matrix of series
    auto entry = [&](int r, int c) -> const Series& {
        return r < n ? s.Lzbar.at(r, c) : s.Lw.at(r - n, c);
    };

    // directional derivative of column c of L along the series vector field
    // (xi in z-slots, lz in zbar-slots, lw in u-slots), applied exactly
    auto col_derivative = [&](int r, int c, int j) {
        // d/dz_j L[r][c] + sum_m Lzbar[m][j] d/dzbar_m L[r][c] + sum_m Lw[m][j] d/du_m L[r][c]
        Series acc = differentiate(entry(r, c), var_z(dims, j));
        for (int m = 0; m < n; ++m)
            acc = acc + mul(s.Lzbar.at(m, j), differentiate(entry(r, c), var_zbar(dims, m)));
        for (int m = 0; m < d; ++m)
            acc = acc + mul(s.Lw.at(m, j), differentiate(entry(r, c), var_u(dims, m)));
        return acc;
    };

    IntegrabilityResidual res;
    for (int j = 0; j < n; ++j)
        for (int k = j + 1; k < n; ++k) {
            std::vector<Series> comp;
            comp.reserve(n + d);
            for (int r = 0; r < n + d; ++r) comp.push_back(col_derivative(r, k, j) - col_derivative(r, j, k));
            res.pairs.push_back(std::move(comp));
            res.index.emplace_back(j, k);
        }
    return res;
}

/// Coefficient matrix of the first-order z- or zbar-part of one row of a
/// structure block: M[v][c] = coefficient of the variable v in entry (row, c).
inline CMat first_order_matrix(const Dims& dims, const SeriesMat& block, int row, bool zbar_vars) {
    CMat m = cmat_zero(dims.n, dims.n);
    for (int v = 0; v < dims.n; ++v)
        for (int c = 0; c < dims.n; ++c)
            m[v][c] = block.at(row, c).coeff(mono_var(zbar_vars ? var_zbar(dims, v) : var_z(dims, v)));
    return m;
}

inline bool satisfies_first_order_normalization(const AlmostCR& s) {
    const Dims& dims = s.dims;
    for (int i = 0; i < dims.n; ++i) {
        CMat zb = first_order_matrix(dims, s.Lzbar, i, true);
        for (int r = 0; r < dims.n; ++r)
            for (int c = 0; c < dims.n; ++c)
                if (!zb[r][c].is_zero()) return false;
        CMat z = first_order_matrix(dims, s.Lzbar, i, false);
        for (int r = 0; r < dims.n; ++r)
            for (int c = 0; c < dims.n; ++c)
                if (z[r][c] != -z[c][r]) return false;
    }
    for (int i = 0; i < dims.d; ++i) {
        CMat zb = first_order_matrix(dims, s.Lw, i, true);
        for (int r = 0; r < dims.n; ++r)
            for (int c = 0; c < dims.n; ++c)
                if (zb[r][c] != -zb[c][r].conj()) return false;  // antihermitian
        CMat z = first_order_matrix(dims, s.Lw, i, false);
        for (int r = 0; r < dims.n; ++r)
            for (int c = 0; c < dims.n; ++c)
                if (z[r][c] != -z[c][r]) return false;
    }
    return true;
}

/// Levi data at 0: hermitian matrix of (1/i) L^w_zbar and its signature.
struct LeviData {
    CMat matrix;    // n x n hermitian
    int signature;  // count of -1 entries after exact diagonalization
    bool nondegenerate;
    std::vector<int> eps;  // -1 entries first, per the model ordering
};

inline LeviData levi_at_0(const AlmostCR& s) {
    if (s.dims.d != 1) throw PreconditionError("levi_at_0 requires d = 1");
    if (!satisfies_first_order_normalization(s))
        throw PreconditionError("structure does not satisfy the first-order normalization");
    const Dims& dims = s.dims;
    CMat zb = first_order_matrix(dims, s.Lw, 0, true);
    CMat herm = cmat_zero(dims.n, dims.n);
    const CRat mi = -crat_i();
    for (int r = 0; r < dims.n; ++r)
        for (int c = 0; c < dims.n; ++c) herm[r][c] = mi * zb[r][c];
    LeviData out;
    out.matrix = herm;
    HermDiag hd = herm_diagonalize(herm);
    out.signature = hd.negatives;
    out.nondegenerate = (hd.rank == dims.n);
    for (int i = 0; i < dims.n; ++i) out.eps.push_back(i < hd.negatives ? -1 : 1);
    return out;
}

/// Nijenhuis tensor at 0: N = 2 L_z read from the degree-1 z coefficients.
struct NijenhuisData {
    std::vector<CMat> zbar;  // n matrices: zbar-component, [xi][eta] indexing
    std::vector<CMat> w;     // d matrices: w-component
};

inline NijenhuisData nijenhuis_at_0(const AlmostCR& s) {
    if (!satisfies_first_order_normalization(s))
        throw PreconditionError("structure does not satisfy the first-order normalization; "
                                "run normalize_first_order");
    const Dims& dims = s.dims;
    NijenhuisData out;
    for (int i = 0; i < dims.n; ++i) {
        CMat z = first_order_matrix(dims, s.Lzbar, i, false);
        for (auto& row : z)
            for (auto& v : row) v = v.scaled_by(2);
        out.zbar.push_back(std::move(z));
    }
    for (int i = 0; i < dims.d; ++i) {
        CMat z = first_order_matrix(dims, s.Lw, i, false);
        for (auto& row : z)
            for (auto& v : row) v = v.scaled_by(2);
        out.w.push_back(std::move(z));
    }
    return out;
}

/// Strong nondegeneracy (d = 1): the Levi form is nondegenerate and
/// xi -> (eta -> 6i L(xi-bar, eta) + N^w(xi, eta)) has trivial kernel.
struct StrongNondegeneracy {
    bool levi_nondegenerate = false;
    bool strong = false;
    std::optional<std::vector<CRat>> kernel_witness;
};

inline StrongNondegeneracy is_strongly_nondegenerate(const AlmostCR& s) {
    if (s.dims.d != 1) throw PreconditionError("strong nondegeneracy requires d = 1");
    const Dims& dims = s.dims;
    const int n = dims.n;
    LeviData levi = levi_at_0(s);
    StrongNondegeneracy out;
    out.levi_nondegenerate = levi.nondegenerate;
    if (!levi.nondegenerate) return out;
    NijenhuisData nij = nijenhuis_at_0(s);

    // F_c(xi) = sum_r 6i conj(xi_r) M[r][c] + xi_r N[r][c]; realify over
    // unknowns (x_1, y_1, ..., x_n, y_n) with xi = x + i y.
    std::vector<SparseRow> rows;
    const CRat six_i = CRat(Rat(0), Rat(6));
    for (int c = 0; c < n; ++c) {
        std::map<int, Rat> re_row, im_row;
        for (int r = 0; r < n; ++r) {
            CRat cx = six_i * levi.matrix[r][c] + nij.w[0][r][c];           // multiplies x_r
            CRat cy = CRat(Rat(6)) * levi.matrix[r][c] + crat_i() * nij.w[0][r][c];  // multiplies y_r
            if (sgn(cx.re) != 0) re_row[2 * r] += cx.re;
            if (sgn(cx.im) != 0) im_row[2 * r] += cx.im;
            if (sgn(cy.re) != 0) re_row[2 * r + 1] += cy.re;
            if (sgn(cy.im) != 0) im_row[2 * r + 1] += cy.im;
        }
        rows.push_back(row_canonical(std::move(re_row)));
        rows.push_back(row_canonical(std::move(im_row)));
    }
    ExactSolver solver(2 * n, std::move(rows));
    if (solver.unique()) {
        out.strong = true;
        return out;
    }
    std::vector<Rat> k = solver.kernel_vector();
    std::vector<CRat> witness(n);
    for (int r = 0; r < n; ++r) witness[r] = CRat(k[2 * r], k[2 * r + 1]);
    out.kernel_witness = std::move(witness);
    return out;
}

/// Structure expressed through the linear substitution z = A z' + v u',
/// u = lambda u' (d = 1 for the v-correction; v may be zero for general d).
/// The Levi matrix transforms by the congruence A^* M A / lambda.
inline AlmostCR linear_frame_change(const AlmostCR& s, const CMat& a, const Rat& lambda,
                                    const std::vector<CRat>& v) {
    const Dims& dims = s.dims;
    const int n = dims.n;
    if (sgn(lambda) == 0) throw PreconditionError("lambda must be nonzero");
    if (int(a.size()) != n) throw ShapeError("A must be n x n");
    CMat a_inv = cmat_inverse(a);  // throws when singular
    bool v_zero = true;
    for (const auto& c : v)
        if (!c.is_zero()) v_zero = false;
    if (!v_zero && dims.d != 1) throw PreconditionError("transversal correction needs d = 1");

    int bound = s.bound();
    // substitution for series arguments
    Subst sub = identity_subst(dims, kInfBound);
    for (int j = 0; j < n; ++j) {
        Series sz(dims, kInfBound);
        for (int c = 0; c < n; ++c)
            sz = sz + Series::variable(dims, kInfBound, var_z(dims, c)).scaled(a[j][c]);
        if (!v_zero) sz = sz + Series::variable(dims, kInfBound, var_u(dims, 0)).scaled(v[j]);
        sub[var_z(dims, j)] = sz;
        sub[var_zbar(dims, j)] = conjugate(sz);
    }
    for (int k = 0; k < dims.d; ++k)
        sub[var_u(dims, k)] = Series::variable(dims, kInfBound, var_u(dims, k)).scaled(CRat(lambda));

    SeriesMat lzb = s.Lzbar.compose_all(sub, bound);
    SeriesMat lw = s.Lw.compose_all(sub, bound);

    auto scalar_mat = [&](const CMat& m, int rows, int cols) {
        SeriesMat out(dims, kInfBound, rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) out.at(i, j) = Series::constant(dims, kInfBound, m[i][j]);
        return out;
    };
    CMat abar = a, abar_inv = a_inv;
    for (auto& row : abar)
        for (auto& x : row) x = x.conj();
    for (auto& row : abar_inv)
        for (auto& x : row) x = x.conj();

    SeriesMat A = scalar_mat(a, n, n), Abar_inv = scalar_mat(abar_inv, n, n);

    // tau' = (lambda id_d - L^w v)^{-1} L^w A;  eta' = Abar^{-1}[L^zbar A + (L^zbar v - vbar) tau']
    SeriesMat lwA = mat_mul(lw, A, bound);
    SeriesMat denom(dims, bound, dims.d, dims.d);
    for (int i = 0; i < dims.d; ++i)
        for (int k = 0; k < dims.d; ++k) {
            Series t = Series::constant(dims, kInfBound, i == k ? CRat(lambda) : CRat());
            if (!v_zero) {
                Series lv(dims, kInfBound);
                for (int j = 0; j < n; ++j) lv = lv + lw.at(i, j).scaled(v[j]);
                t = t - lv;
            }
            denom.at(i, k) = t;
        }
    SeriesMat lw_new = mat_mul(invert_series_matrix(denom, bound), lwA, bound);

    SeriesMat mid = mat_mul(lzb, A, bound);
    if (!v_zero) {
        SeriesMat corr(dims, bound, n, dims.d);
        for (int j = 0; j < n; ++j) {
            Series lv(dims, kInfBound);
            for (int c = 0; c < n; ++c) lv = lv + lzb.at(j, c).scaled(v[c]);
            corr.at(j, 0) = lv - Series::constant(dims, kInfBound, v[j].conj());
        }
        mid = mid + mat_mul(corr, lw_new, bound);
    }
    SeriesMat lzb_new = mat_mul(Abar_inv, mid, bound);

    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) lzb_new.at(i, j) = lzb_new.at(i, j).with_bound(bound);
    for (int i = 0; i < dims.d; ++i)
        for (int j = 0; j < n; ++j) lw_new.at(i, j) = lw_new.at(i, j).with_bound(bound);
    return AlmostCR(dims, lzb_new, lw_new);
}

}  // namespace crnf

#endif
