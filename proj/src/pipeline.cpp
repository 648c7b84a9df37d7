#include "crg/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <random>
#include <sstream>

#include "crg/parse.hpp"

namespace crg {

namespace {

using nlohmann::json;

double positive(const json& value, const char* key) {
    if (!value.is_number()) throw SpecError(std::string("option '") + key + "' must be a number");
    const double v = value.get<double>();
    if (!(v > 0)) throw SpecError(std::string("option '") + key + "' must be positive");
    return v;
}

unsigned positive_count(const json& value, const char* key) {
    if (!value.is_number_integer() || value.get<long long>() <= 0)
        throw SpecError(std::string("option '") + key + "' must be a positive integer");
    return value.get<unsigned>();
}

std::string scalar_text(const json& value) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_number()) {
        std::ostringstream out;
        out.precision(17);
        out << value.get<double>();
        return out.str();
    }
    throw SpecError("init entries must be numbers or decimal strings");
}

Selection parse_selection(const std::string& text) {
    if (text == "match") return Selection::Match;
    if (text == "max") return Selection::Max;
    throw SpecError("select must be 'match' or 'max', got '" + text + "'");
}

void apply_options(const json& options, PipelineOptions& out) {
    if (!options.is_object()) throw SpecError("'options' must be an object");
    for (const auto& [key, value] : options.items()) {
        if (key == "epsilon") out.epsilon = positive(value, "epsilon");
        else if (key == "rmax") out.rmax = positive(value, "rmax");
        else if (key == "precision") out.precision = positive_count(value, "precision");
        else if (key == "rel_tol") out.rel_tol = positive(value, "rel_tol");
        else if (key == "samples_per_ray") out.samples_per_ray = positive_count(value, "samples_per_ray");
        else if (key == "theta_grid") out.theta_grid = positive_count(value, "theta_grid");
        else if (key == "tolerance") out.verify.tolerance = positive(value, "tolerance");
        else if (key == "exclusion") out.verify.exclusion_half_width = positive(value, "exclusion");
        else if (key == "candidate_shift") {
            if (!value.is_number()) throw SpecError("option 'candidate_shift' must be a number");
            out.candidate_shift = value.get<double>();
        } else if (key == "select") {
            if (!value.is_string()) throw SpecError("option 'select' must be a string");
            out.verify.selection = parse_selection(value.get<std::string>());
        } else {
            throw SpecError("unknown option '" + key + "'");
        }
    }
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

OdeSpec parse_spec(const json& document) {
    if (!document.is_object()) throw SpecError("spec must be a JSON object");
    OdeSpec spec;
    for (const auto& [key, value] : document.items()) {
        if (key == "equation") {
            if (!value.is_string()) throw SpecError("'equation' must be a string");
            spec.equation = value.get<std::string>();
        } else if (key == "known_solution") {
            if (!value.is_string()) throw SpecError("'known_solution' must be a string");
            spec.known_solution = value.get<std::string>();
        } else if (key == "init") {
            if (!value.is_array()) throw SpecError("'init' must be an array of [re, im] pairs");
            for (const auto& entry : value) {
                if (entry.is_array() && entry.size() == 2) spec.init.emplace_back(scalar_text(entry[0]), scalar_text(entry[1]));
                else spec.init.emplace_back(scalar_text(entry), "0");
            }
        } else if (key == "options") {
            apply_options(value, spec.options);
        } else {
            throw SpecError("unknown spec field '" + key + "'");
        }
    }
    if (spec.equation.empty()) throw SpecError("spec needs an 'equation'");
    return spec;
}

OdeSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SpecError("cannot read spec file '" + path + "'");
    json document;
    try {
        document = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SpecError("spec file '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_spec(document);
}

std::size_t Analysis::branch_count() const {
    std::size_t total = 0;
    for (const auto& a : leaf_analyses)
        for (const auto& b : a.branches) total += b.multiplicity;
    return total;
}

double Analysis::max_rho() const {
    double best = 0;
    for (const auto& piece : candidates)
        for (const auto& c : piece.candidates) best = std::max(best, to_double(c.rho));
    return best;
}

Analysis analyze(const LinearODE& eq, double epsilon) {
    Analysis out;
    out.equation = eq;
    out.epsilon = epsilon;
    if (eq.is_polynomial()) {
        out.leaves.push_back(fundamental_leaf(eq));
    } else {
        out.normal_form = group(eq);
        out.tree = build_tree(eq, epsilon);
        out.critical_rays = exceptional_rays(*out.tree);
        out.leaves = leaves(*out.tree);
    }
    for (const auto& leaf : out.leaves) out.leaf_analyses.push_back(analyze_leaf(leaf));
    out.candidates = indicator_candidates(out.leaf_analyses);
    out.exceptional = exceptional_directions(out.tree ? &*out.tree : nullptr, out.leaf_analyses);
    return out;
}

IntegratorConfig resolve_config(const PipelineOptions& options, double max_rho) {
    IntegratorConfig config;
    config.rmax = options.rmax.value_or(max_rho > 1 ? 15.0 : 30.0);
    if (options.precision) config.precision = *options.precision;
    if (options.rel_tol) config.rel_tol = *options.rel_tol;
    if (options.samples_per_ray) config.samples_per_ray = *options.samples_per_ray;
    config.validate();
    return config;
}

PipelineReport run_analyze(const OdeSpec& spec) {
    const auto start = std::chrono::steady_clock::now();
    PipelineReport report;
    report.analysis = analyze(LinearODE::parse(spec.equation), spec.options.epsilon);
    report.timing.analyze_ms = elapsed_ms(start);
    return report;
}

std::vector<Complex> random_init(unsigned order, std::uint64_t seed, unsigned precision) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    PrecisionScope scope(precision);
    std::vector<Complex> out;
    for (unsigned k = 0; k < order; ++k) {
        const double re = unit(rng);
        const double im = unit(rng);
        out.emplace_back(Real(re), Real(im));
    }
    return out;
}

PipelineReport run_verify(const OdeSpec& spec, const InitProvider& init) {
    PipelineReport report = run_analyze(spec);
    const auto start = std::chrono::steady_clock::now();
    if (spec.options.candidate_shift != 0) {
        for (auto& piece : report.analysis.candidates)
            for (auto& c : piece.candidates) c.a += spec.options.candidate_shift;
        report.notes.push_back("candidate coefficients shifted by " + std::to_string(spec.options.candidate_shift));
    }
    const Analysis& analysis = report.analysis;
    const unsigned order = analysis.equation.order();

    const IntegratorConfig config = resolve_config(spec.options, analysis.max_rho());
    if (config.rmax < 10 * config.r0) {
        std::ostringstream msg;
        msg << "insufficient data: rmax = " << config.rmax << " gives too short a radius span for growth estimation"
            << " (need rmax >= " << 10 * config.r0 << ")";
        throw InsufficientData(msg.str());
    }
    report.config = config;
    report.verify_options = spec.options.verify;

    InitProvider provider = init;
    if (provider) {
        report.init_kind = "custom";
    } else if (spec.known_solution) {
        provider = closed_form_provider(parse_exppoly(*spec.known_solution), order, config);
        report.init_kind = "closed_form";
    } else if (!spec.init.empty()) {
        if (spec.init.size() != order)
            throw SpecError("'init' needs " + std::to_string(order) + " values (f and its first " +
                            std::to_string(order - 1) + " derivatives)");
        PrecisionScope scope(config.precision);
        std::vector<Complex> values;
        for (const auto& [re, im] : spec.init) {
            try {
                values.emplace_back(Real(re), Real(im));
            } catch (const std::exception&) {
                throw SpecError("init value '" + re + "', '" + im + "' is not a decimal number");
            }
        }
        provider = base_point_provider(analysis.equation, std::move(values), config);
        report.init_kind = "base_point";
    } else if (spec.options.random_init) {
        provider = base_point_provider(analysis.equation, random_init(order, *spec.options.random_init, config.precision),
                                       config);
        report.init_kind = "random";
        report.notes.push_back(
            "random init excites the dominant branch in each sector; matching a subdominant branch needs "
            "closed-form or tuned init");
    } else {
        throw SpecError("verify needs a known_solution, init values or a random-init seed");
    }

    try {
        report.verification = verify(analysis.equation, analysis.candidates, analysis.exceptional,
                                     uniform_grid(spec.options.theta_grid), provider, config, spec.options.verify);
    } catch (const VerificationFailed& e) {
        VerificationReport failed;
        failed.pass = false;
        failed.diagnostics.push_back(e.what());
        report.verification = std::move(failed);
    }
    report.timing.verify_ms = elapsed_ms(start);
    return report;
}

int verify_exit_code(const PipelineReport& report) {
    return report.verification && report.verification->pass ? 0 : 1;
}

}  // namespace crg
