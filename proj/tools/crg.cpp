// crg: growth analysis of linear ODEs with exponential-polynomial
// coefficients.
//
//   crg analyze SPEC.json [--eps E] [--out DIR]
//   crg verify  SPEC.json [--rmax R] [--precision B] [--theta-grid N] [--random-init SEED]
//                         [--select match|max] [--shift-candidates D]
//                         [--out DIR] [--format json|csv|svg]
//   crg plot    REPORT.json OUT.svg
//
// Exit status: 0 pass, 1 verification failure, 2 input error, 3 numeric breakdown.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "crg/parse.hpp"
#include "crg/pipeline.hpp"
#include "crg/report.hpp"

namespace {

using nlohmann::json;

enum Exit { kPass = 0, kFailed = 1, kInputError = 2, kBreakdown = 3 };

struct Flags {
    std::string spec;
    std::optional<double> eps;
    std::optional<double> rmax;
    std::optional<unsigned> precision;
    std::optional<unsigned> theta_grid;
    std::optional<std::uint64_t> random_init;
    std::optional<std::string> select;
    std::optional<double> shift;
    std::string out;
    std::string format = "json";
    bool timing = false;
    std::string plot_report;
    std::string plot_out;
};

void write_artifact(const Flags& flags, const std::string& name, const std::string& content) {
    if (flags.out.empty()) {
        std::cout << content;
        return;
    }
    std::filesystem::create_directories(flags.out);
    const auto path = std::filesystem::path(flags.out) / name;
    std::ofstream file(path, std::ios::binary);
    if (!file) throw crg::SpecError("cannot write '" + path.string() + "'");
    file << content;
}

crg::OdeSpec load(const Flags& flags) {
    crg::OdeSpec spec = crg::load_spec(flags.spec);
    auto& o = spec.options;
    if (flags.eps) o.epsilon = *flags.eps;
    if (flags.rmax) o.rmax = *flags.rmax;
    if (flags.precision) o.precision = *flags.precision;
    if (flags.theta_grid) {
        if (*flags.theta_grid == 0) throw crg::SpecError("empty theta grid");
        o.theta_grid = *flags.theta_grid;
    }
    if (flags.random_init) o.random_init = *flags.random_init;
    if (flags.shift) o.candidate_shift = *flags.shift;
    if (flags.select) {
        if (*flags.select == "match") o.verify.selection = crg::Selection::Match;
        else if (*flags.select == "max") o.verify.selection = crg::Selection::Max;
        else throw crg::SpecError("--select must be 'match' or 'max'");
    }
    return spec;
}

int cmd_analyze(const Flags& flags) {
    if (flags.format != "json") throw crg::SpecError("analyze only writes json");
    const auto report = crg::run_analyze(load(flags));
    write_artifact(flags, "report.json", crg::to_json(report, flags.timing).dump(2) + "\n");
    return kPass;
}

int cmd_verify(const Flags& flags) {
    crg::OdeSpec spec = load(flags);
    // An explicit seed asks for random init even when the spec has a solution.
    if (flags.random_init) {
        spec.known_solution.reset();
        spec.init.clear();
    }
    const auto report = crg::run_verify(spec);
    const json document = crg::to_json(report, flags.timing);
    const std::string text = document.dump(2) + "\n";
    if (flags.format == "json") {
        write_artifact(flags, "report.json", text);
    } else {
        if (!flags.out.empty()) write_artifact(flags, "report.json", text);
        if (flags.format == "csv") {
            std::ostringstream csv;
            crg::write_traces_csv(csv, report.verification->traces);
            write_artifact(flags, "traces.csv", csv.str());
        } else {
            write_artifact(flags, "plot.svg", crg::render_svg(document));
        }
    }
    const int code = crg::verify_exit_code(report);
    if (code != kPass) {
        for (const auto& d : report.verification->diagnostics) std::cerr << "crg: " << d << "\n";
        std::cerr << "crg: verification failed (max error " << report.verification->max_error
                  << (report.verification->coherent ? "" : ", incoherent branches") << ")\n";
    }
    return code;
}

int cmd_plot(const Flags& flags) {
    std::ifstream in(flags.plot_report);
    if (!in) throw crg::SpecError("cannot read report '" + flags.plot_report + "'");
    json document;
    try {
        document = json::parse(in);
    } catch (const json::parse_error& e) {
        throw crg::SpecError(std::string("report is not valid JSON: ") + e.what());
    }
    const std::string svg = crg::render_svg(document);
    std::ofstream out(flags.plot_out, std::ios::binary);
    if (!out) throw crg::SpecError("cannot write '" + flags.plot_out + "'");
    out << svg;
    return kPass;
}

int fail(int code, const std::string& kind, const std::string& message) {
    std::cerr << "crg: " << message << "\n";
    json error = {{"error", {{"kind", kind}, {"message", message}}}, {"exit_code", code}};
    std::cout << error.dump(2) << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Growth indicators of linear ODEs with exponential-polynomial coefficients"};
    app.require_subcommand(1);
    Flags flags;

    auto* analyze = app.add_subcommand("analyze", "Symbolic stages only: normal form, tree, leaves, branches");
    analyze->add_option("spec", flags.spec, "Spec JSON file")->required();
    analyze->add_option("--eps", flags.eps, "Sector aperture epsilon (radians)");
    analyze->add_option("--out", flags.out, "Output directory (default: stdout)");
    analyze->add_option("--format", flags.format, "Output format")->check(CLI::IsMember({"json"}));
    analyze->add_flag("--timing", flags.timing, "Include stage timings in the report");

    auto* verify = app.add_subcommand("verify", "Full pipeline with numeric verification");
    verify->add_option("spec", flags.spec, "Spec JSON file")->required();
    verify->add_option("--eps", flags.eps, "Sector aperture epsilon (radians)");
    verify->add_option("--rmax", flags.rmax, "Outer radius of each ray");
    verify->add_option("--precision", flags.precision, "Working precision in bits");
    verify->add_option("--theta-grid", flags.theta_grid, "Number of rays (default 72)");
    verify->add_option("--random-init", flags.random_init, "Seed for random initial values at z = r0");
    verify->add_option("--select", flags.select, "Candidate selection: match or max");
    verify->add_option("--shift-candidates", flags.shift, "Add a constant to every candidate a (negative control)");
    verify->add_option("--out", flags.out, "Output directory (default: stdout)");
    verify->add_option("--format", flags.format, "Output format")->check(CLI::IsMember({"json", "csv", "svg"}));
    verify->add_flag("--timing", flags.timing, "Include stage timings in the report");

    auto* plot = app.add_subcommand("plot", "SVG polar plot of a verification report");
    plot->add_option("report", flags.plot_report, "Report JSON file")->required();
    plot->add_option("out", flags.plot_out, "Output SVG path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kInputError;
    }

    try {
        if (*analyze) return cmd_analyze(flags);
        if (*verify) return cmd_verify(flags);
        return cmd_plot(flags);
    } catch (const crg::ParseError& e) {
        return fail(kInputError, "parse_error", e.what());
    } catch (const crg::InsufficientData& e) {
        return fail(kInputError, "insufficient_data", e.what());
    } catch (const crg::MissingSection& e) {
        return fail(kInputError, "missing_section", e.what());
    } catch (const crg::NumericBreakdown& e) {
        return fail(kBreakdown, "numeric_breakdown", e.what());
    } catch (const crg::EstimationError& e) {
        return fail(kBreakdown, "estimation_error", e.what());
    } catch (const std::invalid_argument& e) {
        return fail(kInputError, "input_error", e.what());
    } catch (const std::exception& e) {
        return fail(kBreakdown, "internal_error", e.what());
    }
}
