#include "doctest.h"

#include "crg/exppoly.hpp"
#include "crg/parse.hpp"
#include "support.hpp"

using namespace crg;
using crg::testing::Gen;
using crg::testing::relative_gap;

namespace {

ExpPoly E(const char* text) { return parse_exppoly(text); }

}  // namespace

TEST_CASE("exact complex arithmetic and spelling") {
    ExactComplex a(Rational(1, 3), Rational(-2));
    CHECK(to_string(a) == "(1/3-2i)");
    CHECK(to_string(ExactComplex(0, 1)) == "i");
    CHECK(to_string(ExactComplex(0, -1)) == "-i");
    CHECK(to_string(ExactComplex(Rational(-1, 2))) == "-1/2");
    CHECK(a * a.conj() == ExactComplex(a.norm()));
    CHECK(a / a == ExactComplex(1));
    CHECK_THROWS_AS(a / ExactComplex(), std::domain_error);
    CHECK(parse_rational("-6/4") == Rational(-3, 2));
    CHECK(boost::multiprecision::denominator(parse_rational("-6/4")) == 2);
    CHECK_THROWS_AS(parse_rational("1/0"), std::invalid_argument);
}

TEST_CASE("poly basics") {
    Poly p({1, 0, 3});
    CHECK(p.degree() == 2);
    CHECK(p.derivative() == Poly(std::vector<ExactComplex>{0, 6}));
    CHECK(Poly(std::vector<ExactComplex>{1, 2, 0, 0}).degree() == 1);
    CHECK(Poly().is_zero());
    CHECK(pow(Poly::z() + Poly(1), 2) == Poly(std::vector<ExactComplex>{1, 2, 1}));
    auto shifted = p.shifted(Complex(2));
    // 1 + 3(2+h)^2 = 13 + 12h + 3h^2
    CHECK(shifted.size() == 3);
    CHECK(shifted[0].to_double().real() == doctest::Approx(13));
    CHECK(shifted[1].to_double().real() == doctest::Approx(12));
    CHECK(shifted[2].to_double().real() == doctest::Approx(3));
}

TEST_CASE("parse examples") {
    ExpPoly g = E("3*exp(z)");
    REQUIRE(g.terms().size() == 1);
    CHECK(g.terms()[0].mantissa == Poly(3));
    CHECK(g.terms()[0].exponent == Poly::z());

    ExpPoly c = E("cos(z^2)");
    REQUIRE(c.terms().size() == 2);
    for (const auto& t : c.terms()) {
        CHECK(t.mantissa == Poly(ExactComplex(Rational(1, 2))));
        CHECK(t.exponent.degree() == 2);
        CHECK(t.exponent.leading().re == 0);
        CHECK(abs(t.exponent.leading().im) == 1);
    }

    ExpPoly sq = E("exp(z)*exp(z)");
    REQUIRE(sq.terms().size() == 1);
    CHECK(sq.terms()[0].exponent == Poly(std::vector<ExactComplex>{0, 2}));
    Gen gen(7);
    for (int k = 0; k < 5; ++k) {
        auto z = gen.point(3);
        CHECK(relative_gap(sq.eval(z), std::exp(z) * std::exp(z)) < 1e-12);
    }
}

TEST_CASE("ring operation examples") {
    CHECK(E("z*exp(z^2)").derivative() == E("(1 + 2*z^2)*exp(z^2)"));
    ExpPoly twice = E("exp(z) + exp(z)");
    REQUIRE(twice.terms().size() == 1);
    CHECK(twice == E("2*exp(z)"));
    ExpPoly prod = E("(exp(z)+1)*(exp(z)-1)");
    CHECK(prod == E("exp(2*z) - 1"));
    Gen gen(11);
    for (int k = 0; k < 5; ++k) {
        auto z = gen.point(3);
        auto expected = (std::exp(z) + 1.0) * (std::exp(z) - 1.0);
        CHECK(relative_gap(prod.eval(z), expected) < 1e-12);
    }
    CHECK((E("exp(z)") - E("exp(z)")).is_zero());
}

TEST_CASE("evaluation examples") {
    CHECK(std::abs(E("exp(-4/3*z)*(1 - 7*exp(z))").eval(std::complex<double>(0)) - (-6.0)) < 1e-15);
    CHECK(std::abs(E("cos(z^2)").eval(std::complex<double>(0)) - 1.0) < 1e-15);

    PrecisionScope scope(100);
    Complex z(Real(0), pi());
    Evaluation v = E("exp(z)").eval(z);
    CHECK_FALSE(v.overflow);
    Real err = abs(v.value - Complex(-1));
    CHECK(err < Real("1e-25"));
}

TEST_CASE("evaluation at high precision agrees with double evaluation") {
    Gen gen(3);
    for (int k = 0; k < 30; ++k) {
        ExpPoly g = gen.exppoly();
        auto z = gen.point(2);
        auto hi = eval(g, z, 200).value.to_double();
        auto lo = g.eval(z);
        CHECK(std::abs(hi - lo) <= 1e-9 * std::max(1.0, std::abs(hi)));
    }
}

TEST_CASE("overflow falls back to the log form") {
    ExpPoly g = E("3*exp(z^2)");
    Evaluation v = eval(g, std::complex<double>(1e5, 0), 128);
    CHECK(v.overflow);
    CHECK(v.log_form.log_abs.convert_to<double>() == doctest::Approx(1e10 + std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("normalize examples") {
    auto n_third = normalize(E("exp(-4/3*z) - 7*exp(-1/3*z)"));
    CHECK(n_third.s == 1);
    REQUIRE(n_third.groups.size() == 2);
    CHECK(n_third.groups.at(ExactComplex(Rational(-4, 3))) == E("1"));
    CHECK(n_third.groups.at(ExactComplex(Rational(-1, 3))) == E("-7"));

    auto n5 = normalize(E("5"));
    CHECK(n5.s == 0);
    REQUIRE(n5.groups.size() == 1);
    CHECK(n5.groups.begin()->first == ExactComplex(0));

    ExpPoly g = E("2*z - exp(z) + cos(z^2)");
    auto n_five = normalize(g);
    CHECK(n_five.s == 2);
    REQUIRE(n_five.groups.size() == 3);
    CHECK(n_five.groups.at(ExactComplex(0, 1)) == E("1/2"));
    CHECK(n_five.groups.at(ExactComplex(0, -1)) == E("1/2"));
    CHECK(n_five.groups.at(ExactComplex(0)) == E("2*z - exp(z)"));
    Gen gen(5);
    for (int k = 0; k < 5; ++k) {
        auto z = gen.point(2);
        CHECK(relative_gap(n_five.reassemble().eval(z), g.eval(z)) < 1e-12);
    }
    CHECK_THROWS_AS(normalize(ExpPoly()), std::invalid_argument);
}

TEST_CASE("property: normalize round trip and idempotence") {
    Gen gen(2024);
    for (int k = 0; k < 50; ++k) {
        ExpPoly g = gen.exppoly(4, 3);
        auto n = normalize(g);
        ExpPoly back = n.reassemble();
        CHECK(back == g);
        for (int j = 0; j < 20; ++j) {
            auto z = gen.point(5);
            auto expected = eval(g, z, 128);
            auto got = eval(back, z, 128);
            if (expected.overflow) continue;
            Real scale = abs(expected.value);
            Real gap = abs(expected.value - got.value);
            CHECK(gap <= Real(1e-9) * (scale > 1 ? scale : Real(1)));
        }
        auto again = normalize(back);
        CHECK(again.s == n.s);
        CHECK(again.groups == n.groups);
    }
}

TEST_CASE("property: print and parse round trip") {
    Gen gen(99);
    for (int k = 0; k < 60; ++k) {
        ExpPoly g = gen.exppoly(4, 3);
        CAPTURE(to_string(g));
        CHECK(parse_exppoly(to_string(g)) == g);
    }
}

TEST_CASE("property: product rule") {
    Gen gen(123);
    for (int k = 0; k < 40; ++k) {
        ExpPoly a = gen.exppoly(3, 2);
        ExpPoly b = gen.exppoly(3, 2);
        CHECK((a * b).derivative() == a.derivative() * b + a * b.derivative());
    }
}
