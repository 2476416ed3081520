#ifndef CRNF_SERIES_MATRIX_HPP
#define CRNF_SERIES_MATRIX_HPP

#include <vector>

#include "compose.hpp"
#include "series.hpp"

namespace crnf {

struct SingularMatrixError : std::runtime_error {
    explicit SingularMatrixError(const std::string& m) : std::runtime_error(m) {}
};

/// Dense matrix of Gaussian rationals.
using CMat = std::vector<std::vector<CRat>>;

inline CMat cmat_zero(int rows, int cols) { return CMat(rows, std::vector<CRat>(cols)); }

inline CMat cmat_identity(int n) {
    CMat m = cmat_zero(n, n);
    for (int i = 0; i < n; ++i) m[i][i] = CRat(1);
    return m;
}

inline CMat cmat_mul(const CMat& a, const CMat& b) {
    int r = int(a.size()), k = int(b.size()), c = int(b[0].size());
    CMat out = cmat_zero(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < k; ++j) {
            if (a[i][j].is_zero()) continue;
            for (int l = 0; l < c; ++l) out[i][l] += a[i][j] * b[j][l];
        }
    return out;
}

/// Solves the square system m x = rhs exactly; first-nonzero pivoting.
inline std::vector<CRat> cmat_solve(CMat m, std::vector<CRat> rhs) {
    int n = int(m.size());
    std::vector<int> perm(n);
    for (int col = 0; col < n; ++col) {
        int piv = -1;
        for (int r = col; r < n; ++r)
            if (!m[r][col].is_zero()) {
                piv = r;
                break;
            }
        if (piv < 0) throw SingularMatrixError("singular system");
        std::swap(m[piv], m[col]);
        std::swap(rhs[piv], rhs[col]);
        for (int r = col + 1; r < n; ++r) {
            if (m[r][col].is_zero()) continue;
            CRat f = m[r][col] / m[col][col];
            for (int j = col; j < n; ++j) m[r][j] -= f * m[col][j];
            rhs[r] -= f * rhs[col];
        }
    }
    std::vector<CRat> x(n);
    for (int col = n - 1; col >= 0; --col) {
        CRat acc = rhs[col];
        for (int j = col + 1; j < n; ++j) acc -= m[col][j] * x[j];
        x[col] = acc / m[col][col];
    }
    return x;
}

/// Exact inverse by Gauss-Jordan with the first nonzero pivot in column order.
inline CMat cmat_inverse(const CMat& m) {
    int n = int(m.size());
    CMat a = m, inv = cmat_identity(n);
    for (int col = 0; col < n; ++col) {
        int piv = -1;
        for (int r = col; r < n; ++r)
            if (!a[r][col].is_zero()) {
                piv = r;
                break;
            }
        if (piv < 0) throw SingularMatrixError("singular matrix");
        std::swap(a[piv], a[col]);
        std::swap(inv[piv], inv[col]);
        CRat p = a[col][col];
        for (int j = 0; j < n; ++j) {
            a[col][j] = a[col][j] / p;
            inv[col][j] = inv[col][j] / p;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col || a[r][col].is_zero()) continue;
            CRat f = a[r][col];
            for (int j = 0; j < n; ++j) {
                a[r][j] -= f * a[col][j];
                inv[r][j] -= f * inv[col][j];
            }
        }
    }
    return inv;
}

/// Matrix of truncated series; all entries share (n, d) and their bounds are
/// managed per entry.
class SeriesMat {
  public:
    SeriesMat() : rows_(0), cols_(0) {}
    SeriesMat(Dims dims, int bound, int rows, int cols)
        : dims_(dims), rows_(rows), cols_(cols), e_(rows * cols, Series::zero(dims, bound)) {}

    static SeriesMat identity(Dims dims, int bound, int n) {
        SeriesMat m(dims, bound, n, n);
        for (int i = 0; i < n; ++i) m.at(i, i) = Series::constant(dims, bound, CRat(1));
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    const Dims& dims() const { return dims_; }

    Series& at(int r, int c) { return e_[r * cols_ + c]; }
    const Series& at(int r, int c) const { return e_[r * cols_ + c]; }

    int min_bound() const {
        int b = kInfBound;
        for (const auto& s : e_) b = std::min(b, s.bound());
        return b;
    }

    SeriesMat operator-() const {
        SeriesMat r = *this;
        for (auto& s : r.e_) s = -s;
        return r;
    }

    friend SeriesMat operator+(const SeriesMat& a, const SeriesMat& b) {
        a.check_shape(b);
        SeriesMat r = a;
        for (std::size_t i = 0; i < r.e_.size(); ++i) r.e_[i] = r.e_[i] + b.e_[i];
        return r;
    }

    friend SeriesMat operator-(const SeriesMat& a, const SeriesMat& b) {
        a.check_shape(b);
        SeriesMat r = a;
        for (std::size_t i = 0; i < r.e_.size(); ++i) r.e_[i] = r.e_[i] - b.e_[i];
        return r;
    }

    friend SeriesMat mat_mul(const SeriesMat& a, const SeriesMat& b, int cap = kInfBound) {
        if (a.cols_ != b.rows_) throw ShapeError("matrix shape mismatch");
        SeriesMat r(a.dims_, cap, a.rows_, b.cols_);
        for (int i = 0; i < a.rows_; ++i)
            for (int j = 0; j < b.cols_; ++j) {
                Series acc(a.dims_, kInfBound);
                for (int k = 0; k < a.cols_; ++k) acc = acc + mul(a.at(i, k), b.at(k, j), cap);
                r.at(i, j) = std::move(acc);
            }
        return r;
    }

    friend bool operator==(const SeriesMat& a, const SeriesMat& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.e_ == b.e_;
    }

    CMat constant_part() const {
        CMat m = cmat_zero(rows_, cols_);
        for (int i = 0; i < rows_; ++i)
            for (int j = 0; j < cols_; ++j) m[i][j] = at(i, j).coeff(kMonoOne);
        return m;
    }

    SeriesMat compose_all(const Subst& sub, int cap = kInfBound) const {
        SeriesMat r = *this;
        for (auto& s : r.e_) s = compose(s, sub, cap);
        return r;
    }

    void check_shape(const SeriesMat& o) const {
        if (rows_ != o.rows_ || cols_ != o.cols_ || dims_ != o.dims_)
            throw ShapeError("matrix shape mismatch");
    }

  private:
    Dims dims_{1, 1};
    int rows_, cols_;
    std::vector<Series> e_;
};

/// M^{-1} with M = M0(id + N): exact geometric series on the nilpotent part.
inline SeriesMat invert_series_matrix(const SeriesMat& m, int cap = kInfBound) {
    if (m.rows() != m.cols()) throw ShapeError("inverse of non-square matrix");
    int n = m.rows();
    int bound = std::min(cap, m.min_bound());
    if (bound >= kInfBound) bound = m.min_bound();
    const Dims& dims = m.dims();
    CMat m0inv = cmat_inverse(m.constant_part());  // throws SingularMatrixError

    SeriesMat m0inv_s(dims, kInfBound, n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            m0inv_s.at(i, j) = Series::constant(dims, kInfBound, m0inv[i][j]);

    SeriesMat nil = mat_mul(m0inv_s, m, bound) - SeriesMat::identity(dims, kInfBound, n);
    auto mat_ord = [&](const SeriesMat& x) {
        int o = kInfBound;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) o = std::min(o, x.at(i, j).is_zero() ? kInfBound : x.at(i, j).ord());
        return o;
    };
    SeriesMat acc = SeriesMat::identity(dims, kInfBound, n);
    SeriesMat pw = nil;
    for (int k = 1; mat_ord(pw) <= bound; ++k) {
        acc = (k % 2 == 1) ? acc - pw : acc + pw;
        pw = mat_mul(pw, nil, bound);
    }
    SeriesMat inv = mat_mul(acc, m0inv_s, bound);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) inv.at(i, j) = inv.at(i, j).with_bound(bound);
    return inv;
}

/// Row contraction with the Euler field: sum_j row_j * z_j.
inline Series euler_eval(const SeriesMat& row) {
    if (row.rows() != 1) throw ShapeError("euler_eval expects a single row");
    const Dims& dims = row.dims();
    if (row.cols() != dims.n) throw ShapeError("euler_eval row must have n columns");
    Series acc(dims, kInfBound);
    for (int j = 0; j < dims.n; ++j)
        acc = acc + mul(row.at(0, j), Series::variable(dims, kInfBound, var_z(dims, j)));
    return acc;
}

}  // namespace crnf

#endif
