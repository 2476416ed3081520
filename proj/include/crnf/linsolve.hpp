#ifndef CRNF_LINSOLVE_HPP
#define CRNF_LINSOLVE_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

#include "rational.hpp"

namespace crnf {

/// Sparse row over Q: sorted (column, value) pairs.
using SparseRow = std::vector<std::pair<int, Rat>>;

inline SparseRow row_canonical(std::map<int, Rat> m) {
    SparseRow r;
    r.reserve(m.size());
    for (auto& [c, v] : m)
        if (sgn(v) != 0) r.emplace_back(c, std::move(v));
    return r;
}

/// Exact Gaussian elimination over Q with a deterministic Markowitz-style
/// pivot rule. Factorizes once; solves many right-hand sides. Detects rank
/// deficiency and surfaces a kernel vector.
class ExactSolver {
  public:
    ExactSolver(int ncols, std::vector<SparseRow> rows) : ncols_(ncols), rows_(std::move(rows)) {
        factorize();
    }

    int ncols() const { return ncols_; }
    int nrows() const { return int(rows_.size()); }
    bool unique() const { return int(pivots_.size()) == ncols_; }

    /// A nonzero vector in the kernel of the column map (empty when unique).
    std::vector<Rat> kernel_vector() const {
        std::vector<Rat> k(ncols_, Rat(0));
        if (unique()) return {};
        int free_col = -1;
        for (int c = 0; c < ncols_; ++c)
            if (!col_is_pivot_[c]) {
                free_col = c;
                break;
            }
        k[free_col] = 1;
        back_substitute(k, std::vector<Rat>(rows_.size(), Rat(0)));
        return k;
    }

    /// Solves A x = rhs. Returns nullopt when inconsistent. Requires a unique
    /// solution (call unique() first; solving a rank-deficient system throws).
    std::optional<std::vector<Rat>> solve(std::vector<Rat> rhs) const {
        if (!unique()) throw std::logic_error("solve on rank-deficient system");
        if (int(rhs.size()) != int(rows_.size())) throw std::invalid_argument("rhs size mismatch");
        for (const auto& [target, src, factor] : ops_) rhs[target] -= factor * rhs[src];
        for (int r = 0; r < int(rows_.size()); ++r)
            if (rows_[r].empty() && sgn(rhs[r]) != 0) return std::nullopt;
        std::vector<Rat> x(ncols_, Rat(0));
        back_substitute(x, rhs);
        return x;
    }

  private:
    void factorize() {
        col_is_pivot_.assign(ncols_, false);
        std::vector<bool> row_done(rows_.size(), false);
        for (;;) {
            // column occupancy among active rows
            std::vector<int> colcount(ncols_, 0);
            for (std::size_t r = 0; r < rows_.size(); ++r) {
                if (row_done[r]) continue;
                for (const auto& [c, v] : rows_[r]) ++colcount[c];
            }
            long best = -1;
            int br = -1, bc = -1;
            for (std::size_t r = 0; r < rows_.size(); ++r) {
                if (row_done[r] || rows_[r].empty()) continue;
                for (const auto& [c, v] : rows_[r]) {
                    long score = long(rows_[r].size() - 1) * long(colcount[c] - 1);
                    if (best < 0 || score < best || (score == best && (c < bc || (c == bc && int(r) < br)))) {
                        best = score;
                        br = int(r);
                        bc = c;
                    }
                }
            }
            if (best < 0) break;
            pivots_.emplace_back(br, bc);
            col_is_pivot_[bc] = true;
            row_done[br] = true;
            const Rat pv = row_value(rows_[br], bc);
            for (std::size_t r = 0; r < rows_.size(); ++r) {
                if (row_done[r] || rows_[r].empty()) continue;
                Rat v = row_value(rows_[r], bc);
                if (sgn(v) == 0) continue;
                Rat f = v / pv;
                rows_[r] = axpy(rows_[r], rows_[br], -f);
                ops_.emplace_back(int(r), br, std::move(f));
            }
        }
    }

    // x[pivot cols] from the echelon rows, in reverse pivot order; free
    // columns keep their preset values.
    void back_substitute(std::vector<Rat>& x, const std::vector<Rat>& rhs) const {
        for (auto it = pivots_.rbegin(); it != pivots_.rend(); ++it) {
            auto [r, c] = *it;
            Rat acc = rhs[r];
            Rat pv;
            for (const auto& [col, v] : rows_[r]) {
                if (col == c)
                    pv = v;
                else if (sgn(x[col]) != 0)
                    acc -= v * x[col];
            }
            x[c] = acc / pv;
        }
    }

    static Rat row_value(const SparseRow& row, int col) {
        auto it = std::lower_bound(row.begin(), row.end(), col,
                                   [](const auto& p, int c) { return p.first < c; });
        return (it != row.end() && it->first == col) ? it->second : Rat(0);
    }

    static SparseRow axpy(const SparseRow& a, const SparseRow& b, const Rat& f) {
        SparseRow out;
        out.reserve(a.size() + b.size());
        std::size_t i = 0, j = 0;
        while (i < a.size() || j < b.size()) {
            if (j >= b.size() || (i < a.size() && a[i].first < b[j].first)) {
                out.push_back(a[i++]);
            } else if (i >= a.size() || b[j].first < a[i].first) {
                Rat v = f * b[j].second;
                if (sgn(v) != 0) out.emplace_back(b[j].first, std::move(v));
                ++j;
            } else {
                Rat v = a[i].second + f * b[j].second;
                if (sgn(v) != 0) out.emplace_back(a[i].first, std::move(v));
                ++i, ++j;
            }
        }
        return out;
    }

    int ncols_;
    std::vector<SparseRow> rows_;
    std::vector<std::pair<int, int>> pivots_;             // (row, col) in elimination order
    std::vector<std::tuple<int, int, Rat>> ops_;          // row[target] -= factor * row[src]
    std::vector<bool> col_is_pivot_;
};

}  // namespace crnf

#endif
