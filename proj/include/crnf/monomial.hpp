#ifndef CRNF_MONOMIAL_HPP
#define CRNF_MONOMIAL_HPP

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace crnf {

/// Problem dimensions: n = CR dimension (z-variables), d = CR codimension (u-variables).
struct Dims {
    int n = 1;
    int d = 1;

    int vars() const { return 2 * n + d; }
    friend bool operator==(const Dims& a, const Dims& b) { return a.n == b.n && a.d == b.d; }
    friend bool operator!=(const Dims& a, const Dims& b) { return !(a == b); }
};

inline constexpr int kMaxN = 3;
inline constexpr int kMaxD = 2;

inline void check_dims(const Dims& dims) {
    if (dims.n < 1 || dims.n > kMaxN || dims.d < 1 || dims.d > kMaxD)
        throw std::invalid_argument("dims out of range: n in [1,3], d in [1,2]");
}

// A monomial z^a zbar^b u^c packed into 8 exponent lanes of 8 bits:
// lanes [0,n) hold a, [n,2n) hold b, [2n,2n+d) hold c. Lane order within a
// block follows variable index. Exponents stay far below 255 at practical
// truncation weights, so lane-wise monomial product is a plain integer add.
using Mono = std::uint64_t;

inline constexpr Mono kMonoOne = 0;

inline int mono_exp(Mono m, int lane) { return int((m >> (8 * lane)) & 0xFF); }

inline Mono mono_set_exp(Mono m, int lane, int e) {
    m &= ~(Mono(0xFF) << (8 * lane));
    m |= Mono(e & 0xFF) << (8 * lane);
    return m;
}

inline Mono mono_mul(Mono a, Mono b) { return a + b; }

/// Variable identifiers: z_j, zbar_j (j in [0,n)), u_k (k in [0,d)), as flat lane indices.
inline int var_z(const Dims&, int j) { return j; }
inline int var_zbar(const Dims& dims, int j) { return dims.n + j; }
inline int var_u(const Dims& dims, int k) { return 2 * dims.n + k; }

inline bool is_z_var(const Dims& dims, int v) { return v < dims.n; }
inline bool is_zbar_var(const Dims& dims, int v) { return v >= dims.n && v < 2 * dims.n; }
inline bool is_u_var(const Dims& dims, int v) { return v >= 2 * dims.n && v < dims.vars(); }

/// Weight of a variable: 1 for z and zbar, 2 for u.
inline int var_weight(const Dims& dims, int v) { return is_u_var(dims, v) ? 2 : 1; }

inline Mono mono_var(int lane) { return Mono(1) << (8 * lane); }

inline int mono_deg_z(const Dims& dims, Mono m) {
    int s = 0;
    for (int j = 0; j < dims.n; ++j) s += mono_exp(m, j);
    return s;
}

inline int mono_deg_zbar(const Dims& dims, Mono m) {
    int s = 0;
    for (int j = 0; j < dims.n; ++j) s += mono_exp(m, dims.n + j);
    return s;
}

inline int mono_deg_u(const Dims& dims, Mono m) {
    int s = 0;
    for (int k = 0; k < dims.d; ++k) s += mono_exp(m, 2 * dims.n + k);
    return s;
}

/// weight = |a| + |b| + 2|c|
inline int mono_weight(const Dims& dims, Mono m) {
    return mono_deg_z(dims, m) + mono_deg_zbar(dims, m) + 2 * mono_deg_u(dims, m);
}

/// ordinary total degree = |a| + |b| + |c|
inline int mono_order(const Dims& dims, Mono m) {
    return mono_deg_z(dims, m) + mono_deg_zbar(dims, m) + mono_deg_u(dims, m);
}

/// Swap a and b exponent blocks (conjugation on monomials).
inline Mono mono_conj(const Dims& dims, Mono m) {
    Mono a = m & ((Mono(1) << (8 * dims.n)) - 1);
    Mono b = (m >> (8 * dims.n)) & ((Mono(1) << (8 * dims.n)) - 1);
    Mono u = m >> (16 * dims.n);
    return b | (a << (8 * dims.n)) | (u << (16 * dims.n));
}

/// Fixed total order: by weight, then |a|, then lexicographic on (a, b, c).
inline bool mono_less(const Dims& dims, Mono x, Mono y) {
    if (x == y) return false;
    int wx = mono_weight(dims, x), wy = mono_weight(dims, y);
    if (wx != wy) return wx < wy;
    int ax = mono_deg_z(dims, x), ay = mono_deg_z(dims, y);
    if (ax != ay) return ax < ay;
    for (int v = 0; v < dims.vars(); ++v) {
        int ex = mono_exp(x, v), ey = mono_exp(y, v);
        if (ex != ey) return ex < ey;
    }
    return false;
}

namespace detail {
// all ways to place total degree `deg` on lanes [lane0, lane0+count)
inline void enum_block(int lane0, int count, int deg, Mono cur, std::vector<Mono>& out) {
    if (count == 1) {
        out.push_back(mono_set_exp(cur, lane0, deg));
        return;
    }
    for (int e = deg; e >= 0; --e) enum_block(lane0 + 1, count - 1, deg - e, mono_set_exp(cur, lane0, e), out);
}
}  // namespace detail

/// Monomials z^a zbar^b (no u part) with |a| = da and |b| = db.
inline std::vector<Mono> monomials_of_bidegree(const Dims& dims, int da, int db) {
    std::vector<Mono> za, out;
    detail::enum_block(0, dims.n, da, kMonoOne, za);
    for (Mono ma : za) {
        std::vector<Mono> zb;
        detail::enum_block(dims.n, dims.n, db, ma, zb);
        out.insert(out.end(), zb.begin(), zb.end());
    }
    return out;
}

/// All monomials of exact weight w, in canonical order.
inline std::vector<Mono> monomials_of_weight(const Dims& dims, int w) {
    std::vector<Mono> out;
    for (int cu = 0; 2 * cu <= w; ++cu) {
        std::vector<Mono> us;
        detail::enum_block(2 * dims.n, dims.d, cu, kMonoOne, us);
        for (Mono mu : us) {
            int rem = w - 2 * cu;
            for (int da = 0; da <= rem; ++da) {
                std::vector<Mono> zz = monomials_of_bidegree(dims, da, rem - da);
                for (Mono m : zz) out.push_back(mono_mul(m, mu));
            }
        }
    }
    std::sort(out.begin(), out.end(), [&](Mono x, Mono y) { return mono_less(dims, x, y); });
    return out;
}

/// All monomials of exact ordinary order k and weight at most wcap.
inline std::vector<Mono> monomials_of_order(const Dims& dims, int k, int wcap) {
    std::vector<Mono> out;
    for (int cu = 0; cu <= k; ++cu) {
        std::vector<Mono> us;
        detail::enum_block(2 * dims.n, dims.d, cu, kMonoOne, us);
        for (Mono mu : us) {
            int rem = k - cu;
            for (int da = 0; da <= rem; ++da) {
                std::vector<Mono> zz = monomials_of_bidegree(dims, da, rem - da);
                for (Mono m : zz) {
                    Mono full = mono_mul(m, mu);
                    if (mono_weight(dims, full) <= wcap) out.push_back(full);
                }
            }
        }
    }
    std::sort(out.begin(), out.end(), [&](Mono x, Mono y) { return mono_less(dims, x, y); });
    return out;
}

inline std::string mono_str(const Dims& dims, Mono m) {
    if (m == kMonoOne) return "1";
    std::string s;
    auto app = [&](const std::string& name, int e) {
        if (e == 0) return;
        if (!s.empty()) s += "*";
        s += name;
        if (e > 1) s += "^" + std::to_string(e);
    };
    for (int j = 0; j < dims.n; ++j) app("z" + std::to_string(j + 1), mono_exp(m, var_z(dims, j)));
    for (int j = 0; j < dims.n; ++j) app("zb" + std::to_string(j + 1), mono_exp(m, var_zbar(dims, j)));
    for (int k = 0; k < dims.d; ++k) app("u" + std::to_string(k + 1), mono_exp(m, var_u(dims, k)));
    return s;
}

}  // namespace crnf

#endif
