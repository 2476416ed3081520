#ifndef CRNF_TEST_SUPPORT_HPP
#define CRNF_TEST_SUPPORT_HPP

#include <random>
#include <vector>

#include "crnf/compose.hpp"
#include "crnf/series.hpp"

namespace crnf::testing {

/// Small-rational coefficient pool for randomized exact tests.
inline CRat random_coeff(std::mt19937& rng, bool allow_zero = true) {
    static const long nums[] = {0, 1, -1, 2, -2, 3, -3, 1, -1, 5};
    static const long dens[] = {1, 1, 2, 3, 1, 2, 4, 5, 3, 7};
    std::uniform_int_distribution<int> pick(0, 9);
    std::uniform_int_distribution<int> im_pick(0, 3);
    for (;;) {
        int a = pick(rng), b = pick(rng);
        CRat c(rat_of(nums[a], dens[a]));
        if (im_pick(rng) != 0) c.im = rat_of(nums[b], dens[b]);
        if (allow_zero || !c.is_zero()) return c;
    }
}

inline Mono random_mono(std::mt19937& rng, const Dims& dims, int max_weight, int min_weight = 0) {
    for (;;) {
        Mono m = kMonoOne;
        std::uniform_int_distribution<int> e(0, 2);
        for (int v = 0; v < dims.vars(); ++v) m = mono_set_exp(m, v, e(rng));
        int w = mono_weight(dims, m);
        if (w >= min_weight && w <= max_weight) return m;
    }
}

inline Series random_series(std::mt19937& rng, const Dims& dims, int bound, int nterms,
                            int min_weight = 0) {
    std::vector<Term> terms;
    for (int i = 0; i < nterms; ++i)
        terms.push_back({random_mono(rng, dims, bound, min_weight), random_coeff(rng, false)});
    return Series::from_terms(dims, bound, terms);
}

/// Random real series (conjugation-symmetric terms).
inline Series random_real_series(std::mt19937& rng, const Dims& dims, int bound, int nterms,
                                 int min_weight = 0) {
    std::vector<Term> terms;
    for (int i = 0; i < nterms; ++i) {
        Mono m = random_mono(rng, dims, bound, min_weight);
        CRat c = random_coeff(rng, false);
        terms.push_back({m, c});
        terms.push_back({mono_conj(dims, m), c.conj()});
    }
    return Series::from_terms(dims, bound, terms);
}

/// Random order >= 2 substitution tangent to the identity.
inline Subst random_near_identity_map(std::mt19937& rng, const Dims& dims, int bound, int nterms) {
    Subst h;
    std::vector<Series> f;
    for (int j = 0; j < dims.n; ++j) {
        std::vector<Term> terms;
        for (int i = 0; i < nterms; ++i) {
            Mono m = random_mono(rng, dims, bound, 2);
            if (mono_order(dims, m) < 2) continue;
            terms.push_back({m, random_coeff(rng, false)});
        }
        f.push_back(Series::from_terms(dims, bound, terms));
    }
    for (int j = 0; j < dims.n; ++j)
        h.push_back(Series::variable(dims, bound, var_z(dims, j)) + f[j]);
    for (int j = 0; j < dims.n; ++j)
        h.push_back(Series::variable(dims, bound, var_zbar(dims, j)) + conjugate(f[j]));
    for (int k = 0; k < dims.d; ++k) {
        std::vector<Term> terms;
        for (int i = 0; i < nterms; ++i) {
            Mono m = random_mono(rng, dims, bound, 2);
            if (mono_order(dims, m) < 2) continue;
            CRat c = random_coeff(rng, false);
            terms.push_back({m, c});
            terms.push_back({mono_conj(dims, m), c.conj()});
        }
        h.push_back(Series::variable(dims, bound, var_u(dims, k)) +
                    Series::from_terms(dims, bound, terms));
    }
    return h;
}

}  // namespace crnf::testing

#endif
