#include "doctest.h"

#include <cmath>
#include <complex>
#include <functional>

#include "crg/numeric.hpp"
#include "crg/parse.hpp"
#include "examples.hpp"

using namespace crg;
using namespace crg::testing;
using cd = std::complex<double>;

namespace {

/// Same geometric spacing as the integrator.
std::vector<double> geometric(double r0, double rmax, std::size_t n) {
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = r0 * std::pow(rmax / r0, static_cast<double>(i) / (n - 1));
    r.back() = rmax;
    return r;
}

RayTrace synthetic(double theta, const std::vector<double>& radii, const std::function<double(cd)>& log_abs) {
    RayTrace t;
    t.theta = theta;
    for (double r : radii) t.samples.push_back({r, log_abs(std::polar(r, theta)), {}});
    t.filtered.assign(radii.size(), false);
    return t;
}

std::vector<RayTrace> synthetic_family(unsigned rays, double rmax, const std::function<double(cd)>& log_abs) {
    std::vector<RayTrace> out;
    const auto radii = geometric(1, rmax, 400);
    for (double theta : uniform_grid(rays)) out.push_back(synthetic(theta, radii, log_abs));
    return out;
}

double log_abs_third_order(cd z) { return std::log(std::abs(std::exp(-4.0 * z / 3.0) * (1.0 - 7.0 * std::exp(z)))); }

IntegratorConfig loose_third_order() {
    IntegratorConfig c;
    c.rel_tol = 1e-12;
    return c;
}

std::vector<Complex> closed_third_order(double theta, const IntegratorConfig& c) {
    PrecisionScope scope(c.precision);
    return closed_form_init(parse_exppoly(kThirdOrderSolution), Complex::polar(Real(c.r0), Real(theta)), 3, c.precision);
}

}  // namespace

TEST_CASE("integrate_ray: e^z through f'' - f = 0") {
    auto eq = LinearODE::parse("f'' - f = 0");
    IntegratorConfig c;
    const double e = std::exp(1.0);
    auto trace = integrate_ray(eq, 0.0, std::vector<cd>{e, e}, c);
    REQUIRE_FALSE(trace.truncated);
    REQUIRE(trace.samples.size() == c.samples_per_ray);
    CHECK(trace.samples.front().r == doctest::Approx(1.0));
    CHECK(trace.samples.back().r == doctest::Approx(30.0));
    for (std::size_t i = 0; i < trace.samples.size(); ++i) {
        const auto& s = trace.samples[i];
        CHECK(std::abs(s.log_abs_f - s.r) < 1e-6);
        REQUIRE(s.log_abs_derivs.size() == 1);
        CHECK(std::abs(s.log_abs_derivs[0] - s.r) < 1e-6);
        if (i > 0) CHECK(s.r > trace.samples[i - 1].r);
    }
}

TEST_CASE("integrate_ray: third-order example along the negative axis") {
    auto eq = LinearODE::parse(kThirdOrder);
    IntegratorConfig c;
    auto trace = integrate_ray(eq, kPi, closed_third_order(kPi, c), c);
    REQUIRE_FALSE(trace.truncated);
    const auto& last = trace.samples.back();
    CHECK(last.r == doctest::Approx(30.0));
    CHECK(std::abs(last.log_abs_f - log_abs_third_order(std::polar(30.0, kPi))) < 0.01);
    CHECK(std::abs(last.log_abs_f - 40.0) < 0.01);
}

TEST_CASE("integrate_ray: e^{z^2} along the positive axis" * doctest::may_fail()) {
    // The second solution grows like exp(e^r) on this ray; see the notes in
    // the README on infeasible rays.
    auto eq = LinearODE::parse(kFiveGroup);
    IntegratorConfig c;
    c.rmax = 15;
    c.max_steps = 2000;
    auto init = closed_form_init(parse_exppoly(kFiveGroupSolution), Complex(1), 2, c.precision);
    auto trace = integrate_ray(eq, 0.0, init, c);
    REQUIRE_FALSE(trace.truncated);
    const auto& last = trace.samples.back();
    CHECK(std::abs(last.log_abs_f - 225.0) / 225.0 < 1e-4);
}

TEST_CASE("integrate_ray: trace stops with a diagnostic at an essential singularity") {
    // f = exp(-1/(z-2)) blows up as z -> 2 from the left.
    auto eq = LinearODE::parse("(z - 2)^2*f' - f = 0");
    IntegratorConfig c;
    c.rmax = 4;
    c.max_steps = 2000;
    const cd f1 = std::exp(1.0);
    auto trace = integrate_ray(eq, 0.0, std::vector<cd>{f1}, c);
    CHECK(trace.truncated);
    CHECK_FALSE(trace.diagnostic.empty());
    CHECK(trace.samples.back().r < 2.0);
}

TEST_CASE("integrate_ray: configuration and input checks") {
    auto eq = LinearODE::parse("f'' - f = 0");
    IntegratorConfig c;
    std::vector<cd> init{1.0, 1.0};
    c.precision = 40;
    CHECK_THROWS_AS(integrate_ray(eq, 0.0, init, c), std::invalid_argument);
    c = {};
    c.rmax = 0.5;
    CHECK_THROWS_AS(integrate_ray(eq, 0.0, init, c), std::invalid_argument);
    c = {};
    c.abs_tol = 0;
    CHECK_THROWS_AS(integrate_ray(eq, 0.0, init, c), std::invalid_argument);
    c = {};
    CHECK_THROWS_AS(integrate_ray(eq, 0.0, std::vector<cd>{1.0}, c), std::invalid_argument);
}

TEST_CASE("integrate_ray: rescaling threshold does not change the trace") {
    auto eq = LinearODE::parse("f'' - f = 0");
    const double e = std::exp(1.0);
    IntegratorConfig a, b;
    a.rescale_threshold = 50;
    b.rescale_threshold = 200;
    auto ta = integrate_ray(eq, 0.0, std::vector<cd>{e, e}, a);
    auto tb = integrate_ray(eq, 0.0, std::vector<cd>{e, e}, b);
    REQUIRE(ta.samples.size() == tb.samples.size());
    for (std::size_t i = 0; i < ta.samples.size(); ++i)
        CHECK(std::abs(ta.samples[i].log_abs_f - tb.samples[i].log_abs_f) < 1e-8);
}

TEST_CASE("integrate_ray: log|f| beyond the double range") {
    auto eq = LinearODE::parse("f' - 2*z*f = 0");
    IntegratorConfig c;
    c.rmax = 40;
    const cd e = std::exp(1.0);
    auto trace = integrate_ray(eq, 0.0, std::vector<cd>{e}, c);
    REQUIRE_FALSE(trace.truncated);
    CHECK(trace.samples.back().log_abs_f == doctest::Approx(1600.0).epsilon(1e-12));
}

TEST_CASE("integrate_ray: scaling the initial values shifts log|f| by log|kappa|") {
    auto eq = LinearODE::parse(kThirdOrder);
    const IntegratorConfig c = loose_third_order();
    const double theta = kPi / 3;
    auto base = closed_third_order(theta, c);
    PrecisionScope scope(c.precision);
    auto scaled = base;
    const Complex kappa(Real(3), Real(-4));
    for (auto& v : scaled) v = v * kappa;
    auto t0 = filter_c0(integrate_ray(eq, theta, base, c));
    auto t1 = filter_c0(integrate_ray(eq, theta, scaled, c));
    REQUIRE(t0.samples.size() == t1.samples.size());
    for (std::size_t i = 0; i < t0.samples.size(); ++i)
        CHECK(std::abs(t1.samples[i].log_abs_f - t0.samples[i].log_abs_f - std::log(5.0)) < 1e-9);
    CHECK(estimate_indicator(t1, 1.0) == doctest::Approx(estimate_indicator(t0, 1.0)).epsilon(1e-9));
}

TEST_CASE("closed_form_init") {
    SUBCASE("e^{z^2} at 1") {
        auto v = closed_form_init(parse_exppoly("exp(z^2)"), cd(1.0), 2);
        const double e = std::exp(1.0);
        CHECK(std::abs(v[0] - cd(e)) < 1e-14);
        CHECK(std::abs(v[1] - cd(2 * e)) < 1e-14);
    }
    SUBCASE("third-order example at 0") {
        // f = e^{-4z/3} - 7 e^{-z/3}: f' = -4/3 + 7/3, f'' = 16/9 - 7/9 at 0.
        auto v = closed_form_init(parse_exppoly(kThirdOrderSolution), cd(0.0), 3);
        CHECK(std::abs(v[0] - cd(-6.0)) < 1e-14);
        CHECK(std::abs(v[1] - cd(1.0)) < 1e-14);
        CHECK(std::abs(v[2] - cd(1.0)) < 1e-14);
    }
    SUBCASE("cos(z^2) at 0") {
        auto v = closed_form_init(parse_exppoly("cos(z^2)"), cd(0.0), 2);
        CHECK(std::abs(v[0] - cd(1.0)) < 1e-15);
        CHECK(std::abs(v[1]) < 1e-15);
    }
    SUBCASE("multiprecision agrees with a hand derivative") {
        PrecisionScope scope(200);
        auto v = closed_form_init(parse_exppoly("z^3*exp(2*z)"), Complex(Real(1) / 2), 2, 200);
        // d/dz z^3 e^{2z} = (3z^2 + 2z^3) e^{2z}
        const Real expected = (Real(3) / 4 + Real(1) / 4) * boost::multiprecision::exp(Real(1));
        CHECK(abs(v[1] - Complex(expected)) < Real("1e-55"));
    }
}

TEST_CASE("filter_c0: zeros of sin on the real axis") {
    std::vector<double> radii;
    for (double r = 1; r <= 100; r += 0.02) radii.push_back(r);
    // Samples hugging each zero k pi.
    for (int k = 1; k * kPi < 100; ++k) radii.push_back(k * kPi + 1e-9);
    std::sort(radii.begin(), radii.end());
    auto trace = filter_c0(synthetic(0, radii, [](cd z) { return std::log(std::abs(std::sin(z))); }));
    std::size_t dips = 0;
    for (std::size_t i = 0; i < radii.size(); ++i) {
        const double k = std::round(radii[i] / kPi);
        if (k >= 1 && std::abs(radii[i] - k * kPi) < 1e-8) {
            CHECK(trace.filtered[i]);
            ++dips;
        }
    }
    CHECK(dips == 31);
    CHECK(trace.filtered_fraction < 0.2);
    // Fraction of filtered samples among r <= R decreases in R: the drop
    // threshold grows like log r while the dips keep their shape.
    double previous = 1;
    for (double limit : {10.0, 30.0, 100.0}) {
        std::size_t total = 0, marked = 0;
        for (std::size_t i = 0; i < radii.size() && radii[i] <= limit; ++i) {
            ++total;
            marked += trace.filtered[i] ? 1 : 0;
        }
        const double fraction = static_cast<double>(marked) / static_cast<double>(total);
        CHECK(fraction <= previous);
        previous = fraction;
    }
}

TEST_CASE("filter_c0: smooth traces stay unfiltered") {
    const auto radii = geometric(1, 30, 400);
    CHECK(filter_c0(synthetic(0, radii, [](cd z) { return z.real(); })).filtered_fraction == 0);
    // Steep monotone stretches are not dips.
    CHECK(filter_c0(synthetic(0, geometric(1, 15, 400), [](cd z) { return -std::norm(z); })).filtered_fraction == 0);
    CHECK(filter_c0(synthetic(0, geometric(1, 15, 400), [](cd z) { return std::norm(z); })).filtered_fraction == 0);
}

TEST_CASE("filter_c0: third-order example has no zeros on theta = pi/3") {
    auto eq = LinearODE::parse(kThirdOrder);
    const IntegratorConfig c = loose_third_order();
    auto trace = filter_c0(integrate_ray(eq, kPi / 3, closed_third_order(kPi / 3, c), c));
    CHECK(trace.filtered_fraction == 0);
}

TEST_CASE("filter_c0: a larger threshold never filters more") {
    std::vector<double> radii;
    for (double r = 1; r <= 60; r += 0.01) radii.push_back(r);
    auto trace = synthetic(0.3, radii, [](cd z) { return std::log(std::abs(std::sin(z) * std::exp(z))); });
    double previous = 1;
    for (double drop : {0.5, 1.0, 2.0, 3.0, 5.0}) {
        const double fraction = filter_c0(trace, kDefaultFilterWindow, drop).filtered_fraction;
        CHECK(fraction <= previous);
        previous = fraction;
    }
}

TEST_CASE("estimate_order on closed-form families") {
    CHECK(std::abs(estimate_order(synthetic_family(16, 15, [](cd z) { return (z * z).real(); })) - 2) < 0.1);
    CHECK(std::abs(estimate_order(synthetic_family(16, 30, [](cd z) { return std::log(std::abs(std::cosh(std::sqrt(z)))); })) -
                   0.5) < 0.05);
    CHECK(std::abs(estimate_order(synthetic_family(16, 30, [](cd z) { return z.real(); })) - 1) < 0.05);
    CHECK(std::abs(estimate_order(synthetic_family(16, 30, log_abs_third_order)) - 1) < 0.05);
}

TEST_CASE("estimate_order rejects unusable input") {
    CHECK_THROWS_AS(estimate_order(synthetic_family(6, 15, [](cd z) { return z.real(); })), EstimationError);
    CHECK_THROWS_AS(estimate_order(synthetic_family(16, 15, [](cd) { return -1.0; })), EstimationError);
}

TEST_CASE("estimate_indicator on e^{z^2}") {
    const auto radii = geometric(1, 15, 400);
    auto quad = [](cd z) { return (z * z).real(); };
    CHECK(std::abs(estimate_indicator(synthetic(0, radii, quad), 2) - 1) < 0.02);
    CHECK(std::abs(estimate_indicator(synthetic(kPi / 4, radii, quad), 2)) < 0.05);
}

TEST_CASE("estimate_indicator needs ten usable samples") {
    auto trace = synthetic(0, geometric(1, 15, 12), [](cd z) { return z.real(); });
    CHECK_THROWS_AS(estimate_indicator(trace, 1), EstimationError);
}

TEST_CASE("numeric growth of the third-order example") {
    auto eq = LinearODE::parse(kThirdOrder);
    IntegratorConfig c = loose_third_order();

    SUBCASE("subdominant branch on theta = 0") {
        auto trace = filter_c0(integrate_ray(eq, 0.0, closed_third_order(0.0, c), c));
        CHECK(std::abs(estimate_indicator(trace, 1) + 1.0 / 3) < 0.02);
    }
    SUBCASE("order estimate is stable when rmax doubles") {
        std::vector<double> thetas;
        for (double t : uniform_grid(24))
            if (angular_distance(t, kPi / 2) > 0.15 && angular_distance(t, 3 * kPi / 2) > 0.15) thetas.push_back(t);
        auto run = [&](double rmax) {
            c.rmax = rmax;
            std::vector<RayTrace> traces;
            for (double t : thetas) traces.push_back(filter_c0(integrate_ray(eq, t, closed_third_order(t, c), c)));
            return estimate_order(traces);
        };
        const double r15 = run(15), r30 = run(30);
        CHECK(std::abs(r15 - r30) < 0.02);
        CHECK(std::abs(r30 - 1) < 0.05);
    }
}

TEST_CASE("transport_on_arc reproduces the closed form around the circle") {
    auto eq = LinearODE::parse(kThirdOrder);
    IntegratorConfig c = loose_third_order();
    auto provider = base_point_provider(eq, closed_third_order(0.0, c), c);
    for (double theta : {0.5, 2.0, 3.5, 5.5}) {
        auto moved = provider(theta);
        auto exact = closed_third_order(theta, c);
        PrecisionScope scope(c.precision);
        for (std::size_t j = 0; j < exact.size(); ++j)
            CHECK((abs(moved[j] - exact[j]) / abs(exact[j])).convert_to<double>() < 1e-30);
    }
}

TEST_CASE("transport_on_arc is linear in the initial values") {
    auto eq = LinearODE::parse(kThirdOrder);
    IntegratorConfig c;
    c.rel_tol = 1e-25;
    PrecisionScope scope(c.precision);
    const Complex z0 = Complex::polar(Real(1), Real(0));
    auto u = closed_form_init(parse_exppoly("exp(-4/3*z)"), z0, 3, c.precision);
    auto v = closed_form_init(parse_exppoly("exp(z) - 2*exp(2/3*z)"), z0, 3, c.precision);
    const Complex alpha(Real(2), Real(1)), beta(Real(0), Real(-3));
    std::vector<Complex> mix;
    for (std::size_t j = 0; j < 3; ++j) mix.push_back(alpha * u[j] + beta * v[j]);
    auto tu = transport_on_arc(eq, 1, 0, 2.5, u, c);
    auto tv = transport_on_arc(eq, 1, 0, 2.5, v, c);
    auto tm = transport_on_arc(eq, 1, 0, 2.5, mix, c);
    for (std::size_t j = 0; j < 3; ++j) {
        const Complex expected = alpha * tu[j] + beta * tv[j];
        CHECK((abs(tm[j] - expected) / abs(expected)).convert_to<double>() < 1e-20);
    }
}

TEST_CASE("exceptional directions") {
    SUBCASE("third-order example: two critical rays") {
        auto root = build_tree(LinearODE::parse(kThirdOrder), 0.1);
        std::vector<LeafAnalysis> analyses;
        for (const auto& l : leaves(root)) analyses.push_back(analyze_leaf(l));
        auto dirs = exceptional_directions(&root, analyses);
        REQUIRE(dirs.size() == 2);
        CHECK(dirs[0].angle == doctest::Approx(kPi / 2));
        CHECK(dirs[1].angle == doctest::Approx(3 * kPi / 2));
        CHECK(dirs[0].reason == ExclusionReason::CriticalRay);
    }
    SUBCASE("second-order example: lifted rays and Stokes rays") {
        auto root = build_tree(LinearODE::parse(kFiveGroup), 0.1);
        std::vector<LeafAnalysis> analyses;
        for (const auto& l : leaves(root)) analyses.push_back(analyze_leaf(l));
        auto dirs = exceptional_directions(&root, analyses);
        std::size_t lifted = 0, stokes = 0;
        for (const auto& d : dirs) {
            lifted += d.reason == ExclusionReason::LiftedCriticalRay;
            stokes += d.reason == ExclusionReason::StokesRay;
        }
        CHECK(lifted == 4);
        CHECK(stokes == 4);
        for (std::size_t i = 1; i < dirs.size(); ++i) CHECK(dirs[i].angle > dirs[i - 1].angle);
    }
}

namespace {

struct ThirdOrderSetup {
    LinearODE eq = LinearODE::parse(kThirdOrder);
    DecompNode root = build_tree(eq, 0.1);
    std::vector<LeafAnalysis> analyses;
    std::vector<IndicatorPiece> pieces;
    std::vector<ExceptionalDirection> dirs;
    IntegratorConfig config = loose_third_order();

    ThirdOrderSetup() {
        for (const auto& l : leaves(root)) analyses.push_back(analyze_leaf(l));
        pieces = indicator_candidates(analyses);
        dirs = exceptional_directions(&root, analyses);
    }

    VerificationReport run(const std::vector<IndicatorPiece>& cands, const VerifyOptions& options = {}) const {
        return verify(eq, cands, dirs, uniform_grid(24), closed_form_provider(parse_exppoly(kThirdOrderSolution), 3, config), config,
                      options);
    }
};

}  // namespace

TEST_CASE("verify: third-order example end to end") {
    ThirdOrderSetup s;
    auto report = s.run(s.pieces);
    CHECK(report.pass);
    CHECK(report.coherent);
    REQUIRE(report.rho);
    CHECK(*report.rho == 1.0);
    CHECK(report.per_theta.size() == 24);
    CHECK(report.max_error <= 0.05);
    for (const auto& row : report.per_theta) {
        if (row.excluded) {
            CHECK(row.reason == ExclusionReason::CriticalRay);
            continue;
        }
        REQUIRE(row.matched);
        const double expected_a = std::cos(row.theta) > 0 ? -1.0 / 3 : -4.0 / 3;
        CHECK(row.matched->a.real() == doctest::Approx(expected_a));
    }

    SUBCASE("reruns are identical") {
        auto again = s.run(s.pieces);
        for (std::size_t i = 0; i < report.per_theta.size(); ++i)
            CHECK(report.per_theta[i].h_hat == again.per_theta[i].h_hat);
    }
}

TEST_CASE("verify: max selection picks the dominant branch and fails here") {
    ThirdOrderSetup s;
    VerifyOptions options;
    options.selection = Selection::Max;
    auto report = s.run(s.pieces, options);
    CHECK_FALSE(report.pass);
    CHECK(report.max_error > 1);
}

TEST_CASE("verify: shifted candidates fail") {
    ThirdOrderSetup s;
    auto shifted = s.pieces;
    for (auto& p : shifted)
        for (auto& c : p.candidates) c.a += 0.2;
    CHECK_FALSE(s.run(shifted).pass);
}

TEST_CASE("verify: branch switch inside a sector breaks coherence") {
    ThirdOrderSetup s;
    // Two rotated copies of the true right-sector branch: the nearer one
    // changes at theta = 0, which is not an exceptional ray.
    auto cands = s.pieces;
    for (auto& p : cands) {
        if (!p.sector.contains(0.0)) continue;
        const cd a = -1.0 / 3;
        IndicatorCandidate up = p.candidates[0], down = p.candidates[0];
        up.a = a * std::polar(1.0, 0.2);
        up.branch = 7;
        down.a = a * std::polar(1.0, -0.2);
        down.branch = 8;
        p.candidates = {up, down};
    }
    auto report = s.run(cands);
    CHECK_FALSE(report.coherent);
    CHECK_FALSE(report.pass);
}

TEST_CASE("verify: orders with no candidate and fully excluded grids") {
    ThirdOrderSetup s;
    auto cands = s.pieces;
    for (auto& p : cands)
        for (auto& c : p.candidates) c.rho = Rational(3);
    auto report = s.run(cands);
    CHECK_FALSE(report.pass);
    CHECK_FALSE(report.diagnostics.empty());

    CHECK_THROWS_AS(verify(s.eq, s.pieces, s.dirs, {kPi / 2, 3 * kPi / 2},
                           closed_form_provider(parse_exppoly(kThirdOrderSolution), 3, s.config), s.config),
                    VerificationFailed);
}
