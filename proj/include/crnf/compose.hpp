#ifndef CRNF_COMPOSE_HPP
#define CRNF_COMPOSE_HPP

#include <vector>

#include "series.hpp"

namespace crnf {

/// Substitution map: one series per variable, in lane order z_1..z_n,
/// zbar_1..zbar_n, u_1..u_d.
using Subst = std::vector<Series>;

inline Subst identity_subst(Dims dims, int bound) {
    Subst sub;
    sub.reserve(dims.vars());
    for (int v = 0; v < dims.vars(); ++v) sub.push_back(Series::variable(dims, bound, v));
    return sub;
}

namespace detail {

inline void check_subst(const Dims& dims, const Subst& sub) {
    if (int(sub.size()) != dims.vars()) throw ComposeError("substitution list has wrong length");
    for (int v = 0; v < dims.vars(); ++v) {
        if (sub[v].dims() != dims) throw ShapeError("substitution dimension mismatch");
        if (sub[v].has_constant_term()) throw ComposeError("nonzero constant term in substitution");
        if (sub[v].ord() < var_weight(dims, v))
            throw ComposeError("substitution does not respect the weight grading");
    }
}

inline int compose_bound(const Series& s, const Subst& sub, int cap) {
    int b = std::min(s.bound(), cap);
    std::vector<bool> used(sub.size(), false);
    for (const auto& t : s.terms())
        for (int v = 0; v < int(sub.size()); ++v)
            if (mono_exp(t.m, v) > 0) used[v] = true;
    for (int v = 0; v < int(sub.size()); ++v)
        if (used[v]) b = std::min(b, sub[v].bound());
    return b;
}

inline bool is_identity_sub(const Dims& dims, const Series& s, int v) {
    return s.size() == 1 && s.terms()[0].m == mono_var(v) && s.terms()[0].c == CRat(1);
}

// General path: cached powers of each substituted variable.
inline Series compose_general(const Series& s, const Subst& sub, int bound) {
    const Dims& dims = s.dims();
    const int vars = dims.vars();
    std::vector<std::vector<Series>> powers(vars);
    std::vector<bool> ident(vars);
    for (int v = 0; v < vars; ++v) {
        ident[v] = is_identity_sub(dims, sub[v], v);
        powers[v].push_back(Series::constant(dims, kInfBound, CRat(1)));
    }
    auto power = [&](int v, int e) -> const Series& {
        auto& p = powers[v];
        while (int(p.size()) <= e) p.push_back(mul(p.back(), sub[v], bound));
        return p[e];
    };
    Series out(dims, bound);
    for (const auto& t : s.terms()) {
        Mono ident_part = kMonoOne;
        Series acc = Series::constant(dims, kInfBound, t.c);
        bool dead = false;
        for (int v = 0; v < vars && !dead; ++v) {
            int e = mono_exp(t.m, v);
            if (e == 0) continue;
            if (ident[v]) {
                for (int j = 0; j < e; ++j) ident_part = mono_mul(ident_part, mono_var(v));
                continue;
            }
            acc = mul(acc, power(v, e), bound);
            dead = acc.is_zero();
        }
        if (dead) continue;
        if (ident_part != kMonoOne)
            acc = mul(acc, Series::monomial(dims, kInfBound, ident_part, CRat(1)), bound);
        out = out + acc;
    }
    return out.with_bound(bound);
}

// Near-identity path: s(x + eta) accumulated as the multivariate Taylor sum
// over derivative multi-indices, pruned by weight and by vanishing
// derivatives. Requires every non-identity slot to gain weight (or be a
// u-slot of order >= 2, where the u-degree of s bounds the recursion).
inline void taylor_rec(const Series& deriv, const Series& eta_prod, const Subst& eta, int v,
                       int bound, Series& out) {
    const Dims& dims = deriv.dims();
    if (v == dims.vars()) {
        // ord(eta^gamma) covers the weight consumed by the differentiation,
        // so the leaf is exact through deriv.bound() + ord(eta_prod)
        int leaf_bound = std::min(bound, deriv.bound() + eta_prod.ord());
        out = out + mul(deriv.with_bound(leaf_bound), eta_prod.with_bound(leaf_bound), leaf_bound);
        return;
    }
    taylor_rec(deriv, eta_prod, eta, v + 1, bound, out);
    if (eta[v].is_zero()) return;
    Series d = deriv;
    Series prod = eta_prod;
    for (int j = 1;; ++j) {
        d = differentiate(d, v);
        if (d.is_zero()) return;
        d = d.scaled(CRat(rat_of(1, j)));
        prod = mul(prod, eta[v], bound);
        if (prod.is_zero() || prod.ord() > bound) return;
        taylor_rec(d, prod, eta, v + 1, bound, out);
    }
}

inline Series compose_near_identity(const Series& s, const Subst& eta, int bound) {
    Series out(s.dims(), bound);
    Series one = Series::constant(s.dims(), kInfBound, CRat(1));
    taylor_rec(s.truncated(std::min(s.bound(), kInfBound)), one, eta, 0, bound, out);
    return out.with_bound(bound);
}

}  // namespace detail

/// s evaluated on the substituted variables, exact up to the computed bound.
/// Substitutions must have zero constant term and respect the weight grading.
inline Series compose(const Series& s, const Subst& sub, int cap = kInfBound) {
    const Dims& dims = s.dims();
    detail::check_subst(dims, sub);
    int bound = detail::compose_bound(s, sub, cap);

    bool near_id = true;
    Subst eta;
    eta.reserve(sub.size());
    for (int v = 0; v < dims.vars(); ++v) {
        Series e = sub[v] - Series::variable(dims, sub[v].bound(), v);
        if (!e.is_zero()) {
            int gain = e.ord() - var_weight(dims, v);
            if (gain < 1 && !(is_u_var(dims, v) && e.ord() >= 2)) near_id = false;
        }
        eta.push_back(std::move(e));
    }
    if (near_id) return detail::compose_near_identity(s, eta, bound);
    return detail::compose_general(s, sub, bound);
}

/// Inverse of a formal map h = id + (higher order): returns hinv with
/// compose(h, hinv) = id up to the working bound. The linear part of h must
/// be the identity.
inline Subst reverse_map(const Subst& h, int cap = kInfBound) {
    if (h.empty()) throw ComposeError("empty map");
    const Dims dims = h[0].dims();
    detail::check_subst(dims, h);
    int bound = cap;
    Subst eta;
    for (int v = 0; v < dims.vars(); ++v) {
        bound = std::min(bound, h[v].bound());
        Series e = h[v] - Series::variable(dims, h[v].bound(), v);
        if (!e.is_zero() && e.ord() < var_weight(dims, v) + 1) {
            // a same-weight u-component (weight-2 terms in the u slot) is
            // fine; anything touching the linear part is not
            if (!(is_u_var(dims, v) && e.ord() >= 2)) throw ComposeError("linear part not identity");
        }
        eta.push_back(std::move(e));
    }
    if (bound >= kInfBound) throw ComposeError("reverse_map needs a finite working bound");

    // kappa = -eta o (id + kappa), iterated to the fixed point
    Subst kappa(dims.vars(), Series::zero(dims, bound));
    for (int it = 0; it <= bound + 1; ++it) {
        Subst cur;
        cur.reserve(dims.vars());
        for (int v = 0; v < dims.vars(); ++v)
            cur.push_back(Series::variable(dims, kInfBound, v) + kappa[v]);
        Subst next;
        next.reserve(dims.vars());
        bool stable = true;
        for (int v = 0; v < dims.vars(); ++v) {
            Series nv = -compose(eta[v], cur, bound);
            if (nv != kappa[v]) stable = false;
            next.push_back(std::move(nv));
        }
        kappa = std::move(next);
        if (stable) break;
    }
    Subst hinv;
    hinv.reserve(dims.vars());
    for (int v = 0; v < dims.vars(); ++v)
        hinv.push_back(Series::variable(dims, bound, v) + kappa[v]);

    for (int v = 0; v < dims.vars(); ++v) {
        Series chk = compose(h[v], hinv, bound);
        if (chk != Series::variable(dims, chk.bound(), v).truncated(chk.bound()))
            throw ComposeError("map reversion failed to verify");
    }
    return hinv;
}

}  // namespace crnf

#endif
