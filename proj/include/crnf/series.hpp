#ifndef CRNF_SERIES_HPP
#define CRNF_SERIES_HPP

#include <algorithm>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "monomial.hpp"
#include "rational.hpp"

namespace crnf {

/// Exactness bound used for series known to be complete polynomials.
inline constexpr int kInfBound = 1 << 14;

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& m) : std::runtime_error(m) {}
};
struct ComposeError : std::runtime_error {
    explicit ComposeError(const std::string& m) : std::runtime_error(m) {}
};

struct Term {
    Mono m;
    CRat c;
};

/// Truncated formal power series in (z, zbar, u) with Gaussian-rational
/// coefficients. Terms are kept sorted in the fixed monomial order, with no
/// zero coefficients and no term of weight above `bound`. A coefficient is a
/// Taylor monomial coefficient; the derivative value at 0 is the coefficient
/// times the multi-factorials of the exponents (see derivative_at_zero).
class Series {
  public:
    Series() : dims_{1, 1}, bound_(0) {}
    Series(Dims dims, int bound) : dims_(dims), bound_(bound) { check_dims(dims); }

    static Series zero(Dims dims, int bound) { return Series(dims, bound); }

    static Series constant(Dims dims, int bound, const CRat& c) {
        Series s(dims, bound);
        if (!c.is_zero() && bound >= 0) s.terms_.push_back({kMonoOne, c});
        return s;
    }

    static Series monomial(Dims dims, int bound, Mono m, const CRat& c) {
        Series s(dims, bound);
        if (!c.is_zero() && mono_weight(dims, m) <= bound) s.terms_.push_back({m, c});
        return s;
    }

    static Series variable(Dims dims, int bound, int var) {
        return monomial(dims, bound, mono_var(var), CRat(1));
    }

    /// Builds from an arbitrary term list: sorts, merges duplicates, drops
    /// zeros and over-weight terms. Canonical regardless of insertion order.
    static Series from_terms(Dims dims, int bound, std::vector<Term> terms) {
        Series s(dims, bound);
        std::sort(terms.begin(), terms.end(),
                  [&](const Term& x, const Term& y) { return mono_less(dims, x.m, y.m); });
        for (auto& t : terms) {
            if (mono_weight(dims, t.m) > bound) continue;
            if (!s.terms_.empty() && s.terms_.back().m == t.m)
                s.terms_.back().c += t.c;
            else
                s.terms_.push_back(std::move(t));
        }
        s.strip_zeros();
        return s;
    }

    const Dims& dims() const { return dims_; }
    int bound() const { return bound_; }
    const std::vector<Term>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }

    /// Lowest weight of a stored term; bound+1 when no term is stored (the
    /// true order of the underlying series is at least that).
    int ord() const { return terms_.empty() ? bound_ + 1 : mono_weight(dims_, terms_.front().m); }

    const CRat& coeff(Mono m) const {
        auto it = find(m);
        return it ? *it : crat_zero();
    }

    /// Derivative value at 0 for the exponent pattern of m: coefficient times
    /// the product of factorials of all exponents.
    CRat derivative_at_zero(Mono m) const {
        CRat c = coeff(m);
        if (c.is_zero()) return c;
        Rat f(1);
        for (int v = 0; v < dims_.vars(); ++v)
            for (int e = mono_exp(m, v); e > 1; --e) f *= e;
        return CRat(c.re * f, c.im * f);
    }

    Series truncated(int new_bound) const {
        Series r(dims_, std::min(new_bound, bound_));
        for (const auto& t : terms_) {
            if (mono_weight(dims_, t.m) > r.bound_) break;
            r.terms_.push_back(t);
        }
        return r;
    }

    /// Same coefficients re-declared exact to `new_bound`; only valid when the
    /// caller knows the series is a complete polynomial up to that weight.
    Series with_bound(int new_bound) const {
        Series r = truncated(std::min(new_bound, bound_));
        r.bound_ = new_bound;
        return r;
    }

    Series operator-() const {
        Series r(*this);
        for (auto& t : r.terms_) t.c = -t.c;
        return r;
    }

    friend Series operator+(const Series& a, const Series& b) { return add_impl(a, b, false); }
    friend Series operator-(const Series& a, const Series& b) { return add_impl(a, b, true); }

    Series scaled(const CRat& c) const {
        if (c.is_zero()) return Series(dims_, bound_);
        Series r(*this);
        for (auto& t : r.terms_) t.c *= c;
        r.strip_zeros();
        return r;
    }

    friend bool operator==(const Series& a, const Series& b) {
        if (a.dims_ != b.dims_) return false;
        if (a.terms_.size() != b.terms_.size()) return false;
        for (std::size_t i = 0; i < a.terms_.size(); ++i)
            if (a.terms_[i].m != b.terms_[i].m || a.terms_[i].c != b.terms_[i].c) return false;
        return true;
    }
    friend bool operator!=(const Series& a, const Series& b) { return !(a == b); }

    /// Exact Cauchy product truncated at the shared weight bound; products of
    /// monomials whose combined weight exceeds it are dropped. Every retained
    /// coefficient is exact: min(Wa, Wb) never exceeds the exactness bound
    /// min(Wa + ord b, Wb + ord a).
    friend Series mul(const Series& a, const Series& b, int cap = kInfBound) {
        a.check_same(b);
        int bound = std::min({a.bound_, b.bound_, cap, kInfBound});
        Series r(a.dims_, bound);
        if (a.is_zero() || b.is_zero()) return r;
        const Dims& dims = a.dims_;
        std::unordered_map<Mono, CRat> acc;
        acc.reserve(a.terms_.size() + b.terms_.size());
        for (const auto& ta : a.terms_) {
            int wa = mono_weight(dims, ta.m);
            if (wa + b.ord() > bound) break;
            for (const auto& tb : b.terms_) {
                if (wa + mono_weight(dims, tb.m) > bound) break;
                CRat p = ta.c * tb.c;
                if (p.is_zero()) continue;
                auto [it, fresh] = acc.try_emplace(mono_mul(ta.m, tb.m), std::move(p));
                if (!fresh) it->second += p;
            }
        }
        r.terms_.reserve(acc.size());
        for (auto& [m, c] : acc)
            if (!c.is_zero()) r.terms_.push_back({m, std::move(c)});
        std::sort(r.terms_.begin(), r.terms_.end(),
                  [&](const Term& x, const Term& y) { return mono_less(dims, x.m, y.m); });
        return r;
    }

    friend Series differentiate(const Series& s, int var) {
        if (var < 0 || var >= s.dims_.vars()) throw ShapeError("unknown variable id");
        Series r(s.dims_, std::max(s.bound_ - var_weight(s.dims_, var), -1));
        for (const auto& t : s.terms_) {
            int e = mono_exp(t.m, var);
            if (e == 0) continue;
            r.terms_.push_back({mono_set_exp(t.m, var, e - 1), t.c.scaled_by(e)});
        }
        r.terms_.erase(std::remove_if(r.terms_.begin(), r.terms_.end(),
                                      [&](const Term& t) { return mono_weight(r.dims_, t.m) > r.bound_; }),
                       r.terms_.end());
        std::sort(r.terms_.begin(), r.terms_.end(),
                  [&](const Term& x, const Term& y) { return mono_less(s.dims_, x.m, y.m); });
        return r;
    }

    friend Series conjugate(const Series& s) {
        Series r(s.dims_, s.bound_);
        r.terms_.reserve(s.terms_.size());
        for (const auto& t : s.terms_) r.terms_.push_back({mono_conj(s.dims_, t.m), t.c.conj()});
        std::sort(r.terms_.begin(), r.terms_.end(),
                  [&](const Term& x, const Term& y) { return mono_less(s.dims_, x.m, y.m); });
        return r;
    }

    friend bool is_real(const Series& s) { return conjugate(s) == s; }

    /// Sum of terms with |a| = k and |b| = l (u exponents unrestricted).
    friend Series bigrade_component(const Series& s, int k, int l) {
        Series r(s.dims_, s.bound_);
        for (const auto& t : s.terms_)
            if (mono_deg_z(s.dims_, t.m) == k && mono_deg_zbar(s.dims_, t.m) == l) r.terms_.push_back(t);
        return r;
    }

    friend Series weight_component(const Series& s, int w) {
        Series r(s.dims_, s.bound_);
        for (const auto& t : s.terms_)
            if (mono_weight(s.dims_, t.m) == w) r.terms_.push_back(t);
        return r;
    }

    /// Euler operator in z: sum_j z_j d/dz_j, acting diagonally as |a|.
    friend Series euler_z(const Series& s) {
        Series r(s.dims_, s.bound_);
        for (const auto& t : s.terms_) {
            int a = mono_deg_z(s.dims_, t.m);
            if (a != 0) r.terms_.push_back({t.m, t.c.scaled_by(a)});
        }
        return r;
    }

    bool has_constant_term() const { return !terms_.empty() && terms_.front().m == kMonoOne; }

    void check_same(const Series& o) const {
        if (dims_ != o.dims_) throw ShapeError("dimension mismatch");
    }

    std::string str() const {
        if (terms_.empty()) return "0";
        std::string s;
        for (const auto& t : terms_) {
            if (!s.empty()) s += " + ";
            s += "(" + rat_str(t.c.re) + (sgn(t.c.im) != 0 ? "," + rat_str(t.c.im) + "i" : "") + ")";
            if (t.m != kMonoOne) s += "*" + mono_str(dims_, t.m);
        }
        return s;
    }

  private:
    static Series add_impl(const Series& a, const Series& b, bool sub) {
        a.check_same(b);
        Series r(a.dims_, std::min(a.bound_, b.bound_));
        r.terms_.reserve(a.terms_.size() + b.terms_.size());
        std::size_t i = 0, j = 0;
        const Dims& dims = a.dims_;
        while (i < a.terms_.size() || j < b.terms_.size()) {
            bool take_a;
            if (i >= a.terms_.size())
                take_a = false;
            else if (j >= b.terms_.size())
                take_a = true;
            else if (a.terms_[i].m == b.terms_[j].m) {
                CRat c = sub ? a.terms_[i].c - b.terms_[j].c : a.terms_[i].c + b.terms_[j].c;
                if (!c.is_zero() && mono_weight(dims, a.terms_[i].m) <= r.bound_)
                    r.terms_.push_back({a.terms_[i].m, std::move(c)});
                ++i, ++j;
                continue;
            } else
                take_a = mono_less(dims, a.terms_[i].m, b.terms_[j].m);
            const Term& t = take_a ? a.terms_[i++] : b.terms_[j++];
            CRat c = (!take_a && sub) ? -t.c : t.c;
            if (mono_weight(dims, t.m) <= r.bound_) r.terms_.push_back({t.m, std::move(c)});
        }
        return r;
    }

    const CRat* find(Mono m) const {
        auto it = std::lower_bound(terms_.begin(), terms_.end(), m, [&](const Term& t, Mono key) {
            return mono_less(dims_, t.m, key);
        });
        if (it != terms_.end() && it->m == m) return &it->c;
        return nullptr;
    }

    void strip_zeros() {
        terms_.erase(std::remove_if(terms_.begin(), terms_.end(),
                                    [](const Term& t) { return t.c.is_zero(); }),
                     terms_.end());
    }

    Dims dims_;
    int bound_;
    std::vector<Term> terms_;
};

}  // namespace crnf

#endif
