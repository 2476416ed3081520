#include <catch2/catch_amalgamated.hpp>

#include "crnf/rational.hpp"

using namespace crnf;

TEST_CASE("rational parse and print") {
    CHECK(rat_str(parse_rat("3/6")) == "1/2");
    CHECK(rat_str(parse_rat("-4/2")) == "-2/1");
    CHECK(rat_str(parse_rat("7")) == "7/1");
    CHECK(parse_rat("1/3") + parse_rat("1/6") == parse_rat("1/2"));
    CHECK_THROWS(parse_rat("1/0"));
    CHECK_THROWS(parse_rat(""));
    CHECK_THROWS(parse_rat("x"));
}

TEST_CASE("gaussian rational arithmetic is exact") {
    CRat a = cr(1, 2, 1, 3);   // 1/2 + i/3
    CRat b = cr(-1, 4, 2, 1);  // -1/4 + 2i
    CHECK(a + b == cr(1, 4, 7, 3));
    CHECK(a * b == CRat(rat_of(-1, 8) - rat_of(2, 3), rat_of(1) - rat_of(1, 12)));
    CHECK((a / b) * b == a);
    CHECK(a.conj().conj() == a);
    CHECK((a * b).conj() == a.conj() * b.conj());
    CHECK_THROWS(a / CRat());
}

TEST_CASE("i squared") {
    CHECK(crat_i() * crat_i() == cr(-1));
}
