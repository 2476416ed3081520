#ifndef CRNF_RATIONAL_HPP
#define CRNF_RATIONAL_HPP

#include <gmpxx.h>

#include <ostream>
#include <stdexcept>
#include <string>

namespace crnf {

using Rat = mpq_class;

inline Rat rat_of(long num, long den = 1) {
    if (den == 0) throw std::invalid_argument("zero denominator");
    Rat r(num, den);
    r.canonicalize();
    return r;
}

/// Parses "p/q" or a bare integer "p"; q must be nonzero.
inline Rat parse_rat(const std::string& s) {
    if (s.empty()) throw std::invalid_argument("empty rational literal");
    Rat r;
    if (r.set_str(s, 10) != 0) throw std::invalid_argument("bad rational literal: " + s);
    if (r.get_den() == 0) throw std::invalid_argument("zero denominator: " + s);
    r.canonicalize();
    return r;
}

/// Always "p/q" with q > 0, lowest terms.
inline std::string rat_str(const Rat& r) {
    return r.get_num().get_str() + "/" + r.get_den().get_str();
}

/// Gaussian rational: exact complex number with rational real and imaginary parts.
struct CRat {
    Rat re, im;

    CRat() : re(0), im(0) {}
    CRat(long n) : re(n), im(0) {}
    CRat(Rat r) : re(std::move(r)), im(0) {}
    CRat(Rat r, Rat i) : re(std::move(r)), im(std::move(i)) {}

    bool is_zero() const { return sgn(re) == 0 && sgn(im) == 0; }
    bool is_real() const { return sgn(im) == 0; }

    CRat conj() const { return CRat(re, -im); }

    CRat scaled_by(long k) const { return CRat(re * k, im * k); }

    CRat operator-() const { return CRat(-re, -im); }

    CRat& operator+=(const CRat& o) {
        re += o.re;
        im += o.im;
        return *this;
    }
    CRat& operator-=(const CRat& o) {
        re -= o.re;
        im -= o.im;
        return *this;
    }

    friend CRat operator+(const CRat& a, const CRat& b) { return CRat(a.re + b.re, a.im + b.im); }
    friend CRat operator-(const CRat& a, const CRat& b) { return CRat(a.re - b.re, a.im - b.im); }

    friend CRat operator*(const CRat& a, const CRat& b) {
        if (sgn(a.im) == 0) {
            if (sgn(a.re) == 0) return CRat();
            return CRat(a.re * b.re, a.re * b.im);
        }
        if (sgn(b.im) == 0) {
            if (sgn(b.re) == 0) return CRat();
            return CRat(a.re * b.re, a.im * b.re);
        }
        return CRat(a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re);
    }

    CRat& operator*=(const CRat& o) {
        *this = *this * o;
        return *this;
    }

    friend CRat operator/(const CRat& a, const CRat& b) {
        if (b.is_zero()) throw std::domain_error("division by zero");
        Rat n = b.re * b.re + b.im * b.im;
        return CRat((a.re * b.re + a.im * b.im) / n, (a.im * b.re - a.re * b.im) / n);
    }

    friend bool operator==(const CRat& a, const CRat& b) { return a.re == b.re && a.im == b.im; }
    friend bool operator!=(const CRat& a, const CRat& b) { return !(a == b); }

    friend std::ostream& operator<<(std::ostream& os, const CRat& c) {
        os << rat_str(c.re);
        if (sgn(c.im) != 0) os << (sgn(c.im) > 0 ? "+" : "") << rat_str(c.im) << "i";
        return os;
    }
};

inline const CRat& crat_zero() {
    static const CRat z;
    return z;
}

inline CRat crat_i() { return CRat(Rat(0), Rat(1)); }

inline CRat cr(long re_n, long re_d = 1, long im_n = 0, long im_d = 1) {
    return CRat(rat_of(re_n, re_d), rat_of(im_n, im_d));
}

}  // namespace crnf

#endif
