#include <catch2/catch_amalgamated.hpp>

#include "crnf/compose.hpp"
#include "crnf/series.hpp"
#include "test_support.hpp"

using namespace crnf;
using namespace crnf::testing;

namespace {
const Dims d11{1, 1};

Mono mono(const Dims& dims, int az, int bz, int cu) {
    Mono m = kMonoOne;
    m = mono_set_exp(m, var_z(dims, 0), az);
    m = mono_set_exp(m, var_zbar(dims, 0), bz);
    m = mono_set_exp(m, var_u(dims, 0), cu);
    return m;
}

Series s_mono(const Dims& dims, int bound, int az, int bz, int cu, CRat c) {
    return Series::monomial(dims, bound, mono(dims, az, bz, cu), c);
}
}  // namespace

TEST_CASE("monomial order and weights") {
    CHECK(mono_weight(d11, mono(d11, 1, 1, 0)) == 2);
    CHECK(mono_weight(d11, mono(d11, 0, 0, 1)) == 2);
    CHECK(mono_weight(d11, mono(d11, 2, 1, 2)) == 7);
    CHECK(mono_order(d11, mono(d11, 2, 1, 2)) == 5);
    // weight first, then |a|, then lex
    CHECK(mono_less(d11, mono(d11, 1, 0, 0), mono(d11, 1, 1, 0)));
    CHECK(mono_less(d11, mono(d11, 0, 2, 0), mono(d11, 1, 1, 0)));
    CHECK(mono_conj(d11, mono(d11, 2, 1, 1)) == mono(d11, 1, 2, 1));
}

TEST_CASE("add examples") {
    Series a = s_mono(d11, 8, 1, 1, 0, cr(1));
    CHECK((a + (-a)).is_zero());
    Series z = s_mono(d11, 8, 1, 0, 0, cr(1));
    Series u = s_mono(d11, 8, 0, 0, 1, cr(1));
    Series sum = z + u;
    CHECK(sum.coeff(mono(d11, 1, 0, 0)) == cr(1));
    CHECK(sum.coeff(mono(d11, 0, 0, 1)) == cr(1));
    CHECK(s_mono(d11, 8, 2, 0, 0, cr(1, 2)) + s_mono(d11, 8, 2, 0, 0, cr(1, 3)) ==
          s_mono(d11, 8, 2, 0, 0, cr(5, 6)));
}

TEST_CASE("mul examples") {
    Series one = Series::constant(d11, 8, cr(1));
    Series a = s_mono(d11, 8, 1, 1, 0, cr(2, 3));
    CHECK(mul(a, one) == a);
    CHECK(mul(a, a) == s_mono(d11, 10, 2, 2, 0, cr(4, 9)));
    // truncation: weight 4 product dropped at W = 3
    Series z2 = s_mono(d11, 3, 2, 0, 0, cr(1));
    Series zb2 = s_mono(d11, 3, 0, 2, 0, cr(1));
    CHECK(mul(z2, zb2).is_zero());
}

TEST_CASE("mul truncates at the shared weight bound") {
    Series a = s_mono(d11, 4, 1, 0, 0, cr(1));
    Series b = s_mono(d11, 6, 1, 1, 0, cr(1));
    CHECK(mul(a, b).bound() == 4);
    CHECK(mul(a, a) == s_mono(d11, 4, 2, 0, 0, cr(1)));
}

TEST_CASE("differentiate examples") {
    CHECK(differentiate(s_mono(d11, 8, 2, 1, 0, cr(1)), var_z(d11, 0)) ==
          s_mono(d11, 7, 1, 1, 0, cr(2)));
    CHECK(differentiate(s_mono(d11, 8, 0, 0, 2, cr(1)), var_u(d11, 0)) ==
          s_mono(d11, 6, 0, 0, 1, cr(2)));
    CHECK(differentiate(s_mono(d11, 8, 3, 0, 0, cr(1)), var_zbar(d11, 0)).is_zero());
    CHECK_THROWS_AS(differentiate(s_mono(d11, 8, 1, 0, 0, cr(1)), 99), ShapeError);
}

TEST_CASE("conjugation examples") {
    Series iz = s_mono(d11, 8, 1, 0, 0, cr(0, 1, 1, 1));
    CHECK(conjugate(iz) == s_mono(d11, 8, 0, 1, 0, cr(0, 1, -1, 1)));
    Series r = s_mono(d11, 8, 1, 1, 0, cr(3, 7));
    CHECK(conjugate(r) == r);
    std::mt19937 rng(7);
    for (int i = 0; i < 25; ++i) {
        Series s = random_series(rng, Dims{2, 1}, 6, 8);
        CHECK(conjugate(conjugate(s)) == s);
    }
}

TEST_CASE("is_real examples") {
    CHECK(is_real(s_mono(d11, 8, 1, 1, 0, cr(1))));
    CHECK_FALSE(is_real(s_mono(d11, 8, 1, 1, 0, cr(0, 1, 1, 1))));
    CHECK(is_real(s_mono(d11, 8, 2, 0, 0, cr(1)) + s_mono(d11, 8, 0, 2, 0, cr(1))));
}

TEST_CASE("bigrade partition") {
    Series s = s_mono(d11, 8, 1, 1, 0, cr(1)) + s_mono(d11, 8, 2, 2, 0, cr(1));
    CHECK(bigrade_component(s, 1, 1) == s_mono(d11, 8, 1, 1, 0, cr(1)).with_bound(8));
    Series uz = s_mono(d11, 8, 1, 0, 1, cr(1));
    CHECK(bigrade_component(uz, 1, 0) == uz);
    std::mt19937 rng(11);
    Series r = random_series(rng, Dims{2, 1}, 6, 10);
    Series acc(Dims{2, 1}, r.bound());
    for (int k = 0; k <= 6; ++k)
        for (int l = 0; l + k <= 6; ++l) acc = acc + bigrade_component(r, k, l);
    CHECK(acc == r);
}

TEST_CASE("derivative accessor equals coefficient times multifactorials") {
    Series s = s_mono(d11, 10, 2, 1, 2, cr(5, 7));
    // 2! * 1! * 2! = 4
    CHECK(s.derivative_at_zero(mono(d11, 2, 1, 2)) == cr(20, 7));
    std::mt19937 rng(3);
    for (int i = 0; i < 30; ++i) {
        Dims dims{2, 1};
        Mono m = random_mono(rng, dims, 7);
        CRat c = random_coeff(rng, false);
        Series t = Series::monomial(dims, 8, m, c);
        Rat fact(1);
        for (int v = 0; v < dims.vars(); ++v)
            for (int e = mono_exp(m, v); e > 1; --e) fact *= e;
        CHECK(t.derivative_at_zero(m) == CRat(c.re * fact, c.im * fact));
    }
}

TEST_CASE("compose examples") {
    Series s = s_mono(d11, 8, 2, 0, 0, cr(1));
    Subst id = identity_subst(d11, kInfBound);
    CHECK(compose(s, id).truncated(8) == s);

    Subst sub = identity_subst(d11, kInfBound);
    sub[var_z(d11, 0)] = Series::variable(d11, kInfBound, var_z(d11, 0)) +
                         Series::variable(d11, kInfBound, var_u(d11, 0));
    Series out = compose(s, sub);
    CHECK(out.coeff(mono(d11, 2, 0, 0)) == cr(1));
    CHECK(out.coeff(mono(d11, 1, 0, 1)) == cr(2));
    CHECK(out.coeff(mono(d11, 0, 0, 2)) == cr(1));

    Series zzb = s_mono(d11, 4, 1, 1, 0, cr(1));
    Subst sub2 = identity_subst(d11, kInfBound);
    sub2[var_z(d11, 0)] =
        Series::variable(d11, kInfBound, var_z(d11, 0)) + s_mono(d11, kInfBound, 2, 0, 0, cr(1));
    sub2[var_zbar(d11, 0)] =
        Series::variable(d11, kInfBound, var_zbar(d11, 0)) + s_mono(d11, kInfBound, 0, 2, 0, cr(1));
    Series out2 = compose(zzb, sub2);
    CHECK(out2 == (s_mono(d11, 4, 1, 1, 0, cr(1)) + s_mono(d11, 4, 2, 1, 0, cr(1)) +
                   s_mono(d11, 4, 1, 2, 0, cr(1)) + s_mono(d11, 4, 2, 2, 0, cr(1))));

    Subst bad = identity_subst(d11, kInfBound);
    bad[var_z(d11, 0)] = Series::constant(d11, kInfBound, cr(1));
    CHECK_THROWS_AS(compose(s, bad), ComposeError);
}

TEST_CASE("compose associativity randomized") {
    std::mt19937 rng(17);
    Dims dims{2, 1};
    for (int i = 0; i < 10; ++i) {
        Series s = random_series(rng, dims, 6, 6);
        Subst h1 = random_near_identity_map(rng, dims, 6, 3);
        Subst h2 = random_near_identity_map(rng, dims, 6, 3);
        Subst h12;
        for (int v = 0; v < dims.vars(); ++v) h12.push_back(compose(h1[v], h2, 6));
        Series lhs = compose(compose(s, h1, 6), h2, 6);
        Series rhs = compose(s, h12, 6);
        CHECK(lhs.truncated(6) == rhs.truncated(6));
    }
}

TEST_CASE("conjugation is a ring anti-automorphism commuting with conjugated composition") {
    std::mt19937 rng(23);
    Dims dims{2, 1};
    for (int i = 0; i < 10; ++i) {
        Series a = random_series(rng, dims, 6, 6);
        Series b = random_series(rng, dims, 6, 6);
        CHECK(conjugate(mul(a, b)) == mul(conjugate(a), conjugate(b)));
        CHECK(conjugate(a + b) == conjugate(a) + conjugate(b));
        Subst h = random_near_identity_map(rng, dims, 6, 3);
        Subst hc(h.size(), Series(dims, 0));
        for (int j = 0; j < dims.n; ++j) {
            hc[var_z(dims, j)] = conjugate(h[var_zbar(dims, j)]);
            hc[var_zbar(dims, j)] = conjugate(h[var_z(dims, j)]);
        }
        for (int k = 0; k < dims.d; ++k) hc[var_u(dims, k)] = conjugate(h[var_u(dims, k)]);
        CHECK(conjugate(compose(a, h, 6)) == compose(conjugate(a), hc, 6));
    }
}

TEST_CASE("ring axioms randomized") {
    std::mt19937 rng(29);
    Dims dims{2, 1};
    for (int i = 0; i < 15; ++i) {
        Series a = random_series(rng, dims, 5, 5);
        Series b = random_series(rng, dims, 5, 5);
        Series c = random_series(rng, dims, 5, 5);
        CHECK(mul(mul(a, b), c).truncated(5) == mul(a, mul(b, c)).truncated(5));
        CHECK(mul(a, b + c).truncated(5) == (mul(a, b) + mul(a, c)).truncated(5));
        CHECK(mul(a, b) == mul(b, a));
    }
}

TEST_CASE("reverse map examples") {
    Subst id = identity_subst(d11, 8);
    Subst inv = reverse_map(id, 8);
    for (int v = 0; v < d11.vars(); ++v)
        CHECK(inv[v] == Series::variable(d11, 8, v));

    // z -> z + z^2 reverses to z - z^2 + 2 z^3 at W = 3
    Subst h = identity_subst(d11, kInfBound);
    h[var_z(d11, 0)] =
        Series::variable(d11, kInfBound, var_z(d11, 0)) + s_mono(d11, kInfBound, 2, 0, 0, cr(1));
    Subst k = reverse_map(h, 3);
    Series expected = Series::variable(d11, 3, var_z(d11, 0)) + s_mono(d11, 3, 2, 0, 0, cr(-1)) +
                      s_mono(d11, 3, 3, 0, 0, cr(2));
    CHECK(k[var_z(d11, 0)] == expected);

    Subst bad = identity_subst(d11, 8);
    bad[var_z(d11, 0)] = Series::variable(d11, 8, var_zbar(d11, 0));
    CHECK_THROWS_AS(reverse_map(bad, 8), ComposeError);
}

TEST_CASE("reverse map is a two-sided inverse randomized") {
    std::mt19937 rng(31);
    Dims dims{2, 1};
    for (int i = 0; i < 8; ++i) {
        Subst h = random_near_identity_map(rng, dims, 6, 2);
        Subst k = reverse_map(h, 6);
        for (int v = 0; v < dims.vars(); ++v) {
            CHECK(compose(h[v], k, 6) == Series::variable(dims, 6, v));
            CHECK(compose(k[v], h, 6) == Series::variable(dims, 6, v));
        }
    }
}
