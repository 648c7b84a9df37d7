// Acceptance run: one PASS/FAIL line per criterion, with the wall time of
// each.  The property criterion reruns the matching doctest cases of the
// unit suites, which are linked into this binary.
#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "crg/parse.hpp"
#include "crg/pipeline.hpp"
#include "examples.hpp"
#include "support.hpp"

using namespace crg;
using namespace crg::testing;

namespace {

LinearODE L(const char* text) { return LinearODE::parse(text); }

/// Collects failed checks; a criterion passes when none failed.
class Checks {
public:
    void operator()(bool ok, const std::string& what) {
        if (!ok) failures_.push_back(what);
    }
    void note(const std::string& text) { notes_.push_back(text); }
    bool ok() const { return failures_.empty(); }
    const std::vector<std::string>& notes() const { return notes_; }
    std::string summary() const {
        std::string out;
        for (std::size_t i = 0; i < failures_.size() && i < 6; ++i) out += (i ? "; " : "") + failures_[i];
        if (failures_.size() > 6) out += "; +" + std::to_string(failures_.size() - 6) + " more";
        return out;
    }

private:
    std::vector<std::string> failures_;
    std::vector<std::string> notes_;
};

std::string fmt(double v, int digits = 4) {
    std::ostringstream out;
    out << std::setprecision(digits) << v;
    return out.str();
}

const FundamentalDE* find_leaf(const Analysis& a, const char* text) {
    for (const auto& leaf : a.leaves)
        if (leaf.as_equation() == L(text)) return &leaf;
    return nullptr;
}

std::vector<ExactComplex> sorted(std::vector<ExactComplex> v) {
    std::sort(v.begin(), v.end());
    return v;
}

bool near_any(double angle, const std::vector<double>& targets, double width) {
    return std::any_of(targets.begin(), targets.end(), [&](double t) { return angular_distance(angle, t) <= width; });
}

/// Every non-excluded ray against an independent closed-form indicator.
void check_profile(Checks& check, const VerificationReport& v, const std::function<double(double)>& h, double tol) {
    std::size_t used = 0;
    for (const auto& row : v.per_theta) {
        if (row.excluded) continue;
        ++used;
        if (!row.h_hat) {
            check(false, "no estimate at theta=" + fmt(row.theta));
            continue;
        }
        const double err = std::abs(*row.h_hat - h(row.theta));
        check(err <= tol, "|h_hat - h| = " + fmt(err, 3) + " at theta=" + fmt(row.theta * 180 / kPi, 4) + " deg");
    }
    check(used > 0, "every ray excluded");
}

// Third-order equation with solution e^{-4z/3}(1 - 7e^z), symbolic stages.
bool criterion_1(Checks& check) {
    const Analysis a = analyze(L(kThirdOrder), 0.1);
    check(a.normal_form.has_value(), "no normal form");
    if (!a.normal_form) return false;
    const auto& g = *a.normal_form;
    check(g.s == 1, "s != 1");
    check(g.groups.size() == 2, "group count " + std::to_string(g.groups.size()));
    if (g.groups.size() == 2) {
        check(g.groups[0].first == ExactComplex(0) && g.groups[0].second == L("f''' - 4/3*f' + 16/27*f"),
              "group e^0 differs");
        check(g.groups[1].first == ExactComplex(1) && g.groups[1].second == L("3*f'' - 2*f' - f"),
              "group e^z differs");
    }
    check(sorted(a.tree->hull->vertices) == std::vector<ExactComplex>{0, 1}, "hull is not {0, 1}");
    check(sorted(a.tree->hull->critical_normals) == sorted({ExactComplex(0, 1), ExactComplex(0, -1)}),
          "critical normals are not +-i");
    check(a.critical_rays.size() == 2, "critical ray count " + std::to_string(a.critical_rays.size()));
    if (a.critical_rays.size() == 2) {
        check(a.critical_rays[0].angle == kPi / 2 && a.critical_rays[1].angle == 3 * kPi / 2,
              "critical rays " + fmt(a.critical_rays[0].angle, 17) + ", " + fmt(a.critical_rays[1].angle, 17));
    }
    return true;
}

OdeSpec third_order_spec() {
    OdeSpec s;
    s.equation = kThirdOrder;
    s.known_solution = kThirdOrderSolution;
    s.options.rmax = 30;
    s.options.rel_tol = 1e-12;
    s.options.theta_grid = 72;
    return s;
}

// The same equation, numeric verification from the closed form.
bool criterion_2(Checks& check) {
    const auto report = run_verify(third_order_spec());
    const auto& v = *report.verification;
    check(v.rho_hat >= 0.95 && v.rho_hat <= 1.05, "rho_hat = " + fmt(v.rho_hat, 8));
    check(v.per_theta.size() == 72, "grid size " + std::to_string(v.per_theta.size()));
    check(v.coherent, "incoherent branches");
    check(v.pass, "verification failed");
    const std::vector<double> critical = {kPi / 2, 3 * kPi / 2};
    for (const auto& row : v.per_theta) {
        if (!near_any(row.theta, critical, 0.15))
            check(!row.excluded, "theta=" + fmt(row.theta) + " excluded away from the critical rays");
        if (row.excluded) continue;
        const double expected = std::cos(row.theta) > 0 ? -1.0 / 3 : -4.0 / 3;
        check(row.matched && std::abs(row.matched->a - std::complex<double>(expected)) < 1e-12,
              "wrong branch at theta=" + fmt(row.theta));
    }
    // f = e^{-4z/3} - 7 e^{-z/3}: the larger exponent wins on each side.
    check_profile(check, v, [](double t) { return std::max(-std::cos(t) / 3, -4 * std::cos(t) / 3); }, 0.05);
    check.note("rho_hat=" + fmt(v.rho_hat, 8) + " max_error=" + fmt(v.max_error, 3));
    return true;
}

/// cosh(sqrt z) = sum z^k / (2k)! and two derivatives at z = 1, summed in
/// the working precision.
std::vector<std::pair<std::string, std::string>> cosh_sqrt_at_one(unsigned precision) {
    PrecisionScope scope(precision);
    Real f(0), f1(0), f2(0), term(1);  // term = 1/(2k)!
    for (unsigned k = 0; k < 60; ++k) {
        if (k > 0) term = term / Real((2 * k - 1) * (2 * k));
        f = f + term;
        f1 = f1 + term * Real(k);
        f2 = f2 + term * Real(k) * Real(k > 0 ? k - 1 : 0);
    }
    auto text = [](const Real& x) { return x.str(45, std::ios_base::scientific); };
    return {{text(f), "0"}, {text(f1), "0"}, {text(f2), "0"}};
}

// The cosh(sqrt z) equation.
bool criterion_3(Checks& check) {
    OdeSpec s;
    s.equation = kCoshSqrt;
    s.options.rmax = 300;
    s.init = cosh_sqrt_at_one(128);
    const auto report = run_verify(s);
    const Analysis& a = report.analysis;

    const auto& g = *a.normal_form;
    check(g.s == 1 && g.groups.size() == 2, "normal form shape");
    if (g.groups.size() == 2) {
        check(g.groups[0].first == ExactComplex(0) && g.groups[0].second == L("-z*f'' - 1/2*f' + 1/4*f"),
              "group e^0 differs");
        check(g.groups[1].first == ExactComplex(0, 1) &&
                  g.groups[1].second == L("4*z*f''' + (6 + 4i*z)*f'' + (2i-1)*f' - i*f"),
              "group e^{iz} differs");
    }
    check(sorted(a.tree->hull->vertices) == sorted({ExactComplex(0, -1), ExactComplex(0)}), "hull is not {-i, 0}");
    check(a.critical_rays.size() == 2 && a.critical_rays[0].angle == 0 && a.critical_rays[1].angle == kPi,
          "critical rays are not {0, pi}");

    const FundamentalDE* leaf = find_leaf(a, "-z*f'' - 1/2*f' + 1/4*f");
    check(leaf != nullptr, "leaf -z f'' - f'/2 + f/4 missing");
    if (leaf) {
        const auto segments = newton_polygon(*leaf).admissible_segments();
        check(segments.size() == 1 && segments[0].mu() == Rational(1, 2), "mu != 1/2");
        if (segments.size() == 1) {
            std::vector<ExactComplex> roots;
            for (const auto& r : characteristic_roots(*leaf, segments[0]))
                if (r.exact) roots.push_back(*r.exact);
            check(sorted(roots) == sorted({ExactComplex(Rational(1, 2)), ExactComplex(Rational(-1, 2))}),
                  "roots are not +-1/2");
        }
        std::vector<ExactComplex> leading;
        for (const auto& b : exponents(*leaf)) {
            check(b.p == 2 && b.leading().mu == Rational(1, 2), "branch is not a z^(1/2) branch with p = 2");
            if (b.leading().exact) leading.push_back(*b.leading().exact);
        }
        check(sorted(leading) == sorted({ExactComplex(1), ExactComplex(-1)}), "branches are not +-z^(1/2)");
    }

    const auto& v = *report.verification;
    check(v.rho_hat >= 0.45 && v.rho_hat <= 0.55, "rho_hat = " + fmt(v.rho_hat, 8));
    check(v.pass, "verification failed");
    check_profile(check, v, [](double t) { return std::abs(std::cos(t / 2)); }, 0.05);
    check.note("rho_hat=" + fmt(v.rho_hat, 8) + " max_error=" + fmt(v.max_error, 3));
    return true;
}

const DecompNode* child(const DecompNode& node, const ExactComplex& q) {
    for (const auto& c : node.children)
        if (c.q == q) return &c;
    return nullptr;
}

// The five-group equation solved by e^{z^2}.
bool criterion_4(Checks& check) {
    OdeSpec s;
    s.equation = kFiveGroup;
    s.known_solution = kFiveGroupSolution;
    s.options.rmax = 15;
    s.options.precision = 128;
    s.options.rel_tol = 1e-30;
    const auto report = run_verify(s);
    const Analysis& a = report.analysis;
    const DecompNode& root = *a.tree;

    check(a.normal_form->s == 2, "outer power is not 2");
    check(tree_depth(root) == 2, "tree depth " + std::to_string(tree_depth(root)));
    std::vector<ExactComplex> level1;
    for (const auto& c : root.children) level1.push_back(c.q);
    check(sorted(level1) == sorted({ExactComplex(0, 1), ExactComplex(0, -1), ExactComplex(0)}),
          "level-1 q-set is not {i, -i, 0}");
    const DecompNode* zero = child(root, 0);
    check(zero != nullptr, "no q = 0 child");
    if (zero) {
        std::vector<ExactComplex> level2;
        for (const auto& c : zero->children) level2.push_back(c.q);
        check(sorted(level2) == sorted({ExactComplex(2), ExactComplex(1), ExactComplex(0)}),
              "level-2 q-set is not {2, 1, 0}");
    }

    // The five groups of the printed normal form, by exponent.
    const std::vector<std::pair<const DecompNode*, const char*>> groups = {
        {child(root, ExactComplex(0, 1)), kG1}, {child(root, ExactComplex(0, -1)), kG2},
        {zero ? child(*zero, 2) : nullptr, kG3}, {zero ? child(*zero, 1) : nullptr, kG4},
        {zero ? child(*zero, 0) : nullptr, kG5}};
    for (std::size_t j = 0; j < groups.size(); ++j)
        check(groups[j].first && groups[j].first->equation == L(groups[j].second),
              "group G" + std::to_string(j + 1) + " differs");
    check(a.leaves.size() == 5, "leaf count " + std::to_string(a.leaves.size()));

    // Each leaf annihilates e^{z^2}: derivatives by exact differentiation.
    const ExpPoly f = parse_exppoly(kFiveGroupSolution);
    Gen gen(2024);
    std::vector<std::complex<double>> points;
    for (int k = 0; k < 10; ++k) points.push_back(gen.point(3));
    for (const auto& leaf : a.leaves) {
        const LinearODE eq = leaf.as_equation();
        PrecisionScope scope(128);
        double worst = 0;
        for (auto p : points) {
            const Complex z(Real(p.real()), Real(p.imag()));
            auto d = closed_form_init(f, z, eq.order() + 1, 128);
            Real scale(0);
            for (unsigned m = 0; m <= eq.order(); ++m) {
                const Real term = abs(eq.coefficient(m).eval(z).value * d[m]);
                if (term > scale) scale = term;
            }
            worst = std::max(worst, (abs(apply(eq, z, d)) / scale).convert_to<double>());
        }
        check(worst < 1e-10, "leaf residual " + fmt(worst, 3));
    }

    const FundamentalDE* g3 = find_leaf(a, kG3);
    check(g3 != nullptr, "leaf G3 missing");
    if (g3) {
        const auto branches = exponents(*g3);
        check(branches.size() == 1 && branches[0].puiseux.size() == 1 && branches[0].leading().mu == 2 &&
                  branches[0].leading().exact == ExactComplex(1),
              "G3 branch is not Q = z^2");
    }

    const auto& v = *report.verification;
    check(v.rho_hat >= 1.9 && v.rho_hat <= 2.1, "rho_hat = " + fmt(v.rho_hat, 8));
    check_profile(check, v, [](double t) { return std::cos(2 * t); }, 0.05);
    check.note("rho_hat=" + fmt(v.rho_hat, 10) + " max_error=" + fmt(v.max_error, 3));
    return true;
}

/// Counts the test cases a doctest run enters, so a mistyped filter fails.
struct CaseCounter : doctest::IReporter {
    static inline int entered = 0;
    explicit CaseCounter(const doctest::ContextOptions&) {}
    void report_query(const doctest::QueryData&) override {}
    void test_run_start() override {}
    void test_run_end(const doctest::TestRunStats&) override {}
    void test_case_start(const doctest::TestCaseData&) override { ++entered; }
    void test_case_reenter(const doctest::TestCaseData&) override {}
    void test_case_end(const doctest::CurrentTestCaseStats&) override {}
    void test_case_exception(const doctest::TestCaseException&) override {}
    void subcase_start(const doctest::SubcaseSignature&) override {}
    void subcase_end() override {}
    void log_assert(const doctest::AssertData&) override {}
    void log_message(const doctest::MessageData&) override {}
    void test_case_skipped(const doctest::TestCaseData&) override {}
};
DOCTEST_REGISTER_LISTENER("case_counter", 1, CaseCounter);

bool run_cases(Checks& check, const std::vector<std::string>& names) {
    for (const auto& name : names) {
        CaseCounter::entered = 0;
        doctest::Context context;
        context.setOption("test-case", name.c_str());
        context.setOption("minimal", true);
        const int rc = context.run();
        check(CaseCounter::entered == 1, "'" + name + "' matched " + std::to_string(CaseCounter::entered) + " cases");
        check(rc == 0, "'" + name + "' failed");
    }
    return true;
}

#ifndef CRG_CLI
#define CRG_CLI "crg"
#endif
#ifndef CRG_SPECS
#define CRG_SPECS "."
#endif

// Negative control: shifted candidates must fail through the CLI.
bool criterion_6(Checks& check) {
    auto shifted = third_order_spec();
    shifted.options.candidate_shift = 0.2;
    const auto report = run_verify(shifted);
    check(verify_exit_code(report) == 1, "pipeline exit code " + std::to_string(verify_exit_code(report)));
    check(report.verification && report.verification->max_error > 0.05, "shifted candidates still matched");

    const auto out = std::filesystem::temp_directory_path() / "crg_acceptance_negative";
    const std::string command = std::string("\"") + CRG_CLI + "\" verify \"" + CRG_SPECS +
                                "/third_order.json\" --theta-grid 72 --shift-candidates 0.2 --out \"" + out.string() +
                                "\" > /dev/null 2>&1";
    const int status = std::system(command.c_str());
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    check(code == 1, "cli exit code " + std::to_string(code));
    std::filesystem::remove_all(out);
    check.note("cli exit code " + std::to_string(code) + ", max_error=" + fmt(report.verification->max_error, 3));
    return true;
}

struct Criterion {
    std::string id;
    std::string title;
    double limit_s;
    std::function<bool(Checks&)> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"1", "third-order symbolic: normal form, hull {0,1}, critical rays {pi/2, 3pi/2}", 1, criterion_1},
        {"2", "third-order numeric: rho in [0.95,1.05], coherent branches, error <= 0.05", 20, criterion_2},
        {"3", "cosh sqrt: normal form, hull, leaf polygon, rho in [0.45,0.55], |cos(theta/2)|", 20, criterion_3},
        {"4", "five-group: tree, leaves annihilate e^{z^2}, Q = z^2, rho in [1.9,2.1], cos 2theta", 60, criterion_4},
        {"5a", "property: hull against brute force", 30,
         [](Checks& c) { return run_cases(c, {"property: hull against brute force"}); }},
        {"5b", "property: dominance margin nonnegative inside sectors", 30,
         [](Checks& c) { return run_cases(c, {"property: dominance margin inside dominance sectors"}); }},
        {"5c", "property: grouped reassembly agrees under evaluation", 30,
         [](Checks& c) { return run_cases(c, {"property: grouped reassembly under evaluation"}); }},
        {"5d", "property: Newton polygon root counts and residual drop", 30,
         [](Checks& c) { return run_cases(c, {"property: root count and residual drop on the example leaves"}); }},
        {"5e", "property: Stokes rays against a 3600-point sweep", 30,
         [](Checks& c) { return run_cases(c, {"property: Stokes rays against an angle sweep"}); }},
        {"5f", "property: integrator linearity and rescale invariance", 30,
         [](Checks& c) {
             return run_cases(c, {"transport_on_arc is linear in the initial values",
                                  "integrate_ray: scaling the initial values shifts log|f| by log|kappa|",
                                  "integrate_ray: rescaling threshold does not change the trace"});
         }},
        {"6", "negative control: candidates shifted by 0.2 fail with exit code 1", 20, criterion_6},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        Checks checks;
        const auto start = std::chrono::steady_clock::now();
        try {
            c.run(checks);
        } catch (const std::exception& e) {
            checks(false, std::string("exception: ") + e.what());
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        checks(seconds < c.limit_s, "runtime " + fmt(seconds, 3) + " s over " + fmt(c.limit_s) + " s");
        const bool pass = checks.ok();
        failed += pass ? 0 : 1;
        std::cout << "criterion " << c.id << ": " << (pass ? "PASS" : "FAIL") << "  " << c.title << "  ("
                  << std::fixed << std::setprecision(2) << seconds << " s)" << std::defaultfloat;
        if (!pass) std::cout << "\n    " << checks.summary();
        for (const auto& n : checks.notes()) std::cout << "\n    " << n;
        std::cout << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
