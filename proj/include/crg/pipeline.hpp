// End-to-end orchestration: spec files, the symbolic analysis stages and
// numeric verification, collected into one report.
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "crg/asymptotics.hpp"
#include "crg/decomposition.hpp"
#include "crg/numeric.hpp"
#include "json.hpp"

namespace crg {

/// Malformed spec files or option values.
class SpecError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Inputs that cannot support an estimate (radius span too short, no rays).
class InsufficientData : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct PipelineOptions {
    double epsilon = 0.1;
    /// Unset fields fall back to the order-dependent defaults.
    std::optional<double> rmax;
    std::optional<unsigned> precision;
    std::optional<double> rel_tol;
    std::optional<unsigned> samples_per_ray;
    unsigned theta_grid = 72;
    std::optional<std::uint64_t> random_init;
    /// Added to every candidate coefficient a before matching; a negative
    /// control for the matcher.
    double candidate_shift = 0;
    VerifyOptions verify;
};

/// A JSON spec document:
///   {"equation": "...", "known_solution": "...",
///    "init": [["re", "im"], ...],          values of f, f', ... at z = r0
///    "options": {"epsilon": 0.1, "rmax": 30, "precision": 128, "rel_tol": 1e-20,
///                "samples_per_ray": 400, "theta_grid": 72, "tolerance": 0.05,
///                "exclusion": 0.15, "select": "match", "candidate_shift": 0}}
/// Init entries may be numbers or decimal strings.
struct OdeSpec {
    std::string equation;
    std::optional<std::string> known_solution;
    std::vector<std::pair<std::string, std::string>> init;
    PipelineOptions options;
};

OdeSpec parse_spec(const nlohmann::json& document);
OdeSpec load_spec(const std::string& path);

/// Every symbolic stage.  `normal_form` and `tree` are absent for
/// polynomial-coefficient input, which goes straight to a single leaf.
struct Analysis {
    LinearODE equation;
    double epsilon = 0;
    std::optional<GroupedODE> normal_form;
    std::optional<DecompNode> tree;
    std::vector<ExceptionalRay> critical_rays;
    std::vector<FundamentalDE> leaves;
    std::vector<LeafAnalysis> leaf_analyses;
    std::vector<IndicatorPiece> candidates;
    std::vector<ExceptionalDirection> exceptional;

    /// Branches counted with multiplicity.
    std::size_t branch_count() const;
    /// Largest candidate rho; 0 without candidates.
    double max_rho() const;
};

Analysis analyze(const LinearODE& eq, double epsilon);

/// Defaults: precision 128, rel_tol 1e-20, rmax 30 for growth order <= 1
/// and 15 above.
IntegratorConfig resolve_config(const PipelineOptions& options, double max_rho);

struct Timing {
    double analyze_ms = 0;
    double verify_ms = 0;
};

struct PipelineReport {
    static constexpr const char* kSchema = "crg-report/1";

    Analysis analysis;
    std::optional<VerificationReport> verification;
    std::optional<IntegratorConfig> config;
    VerifyOptions verify_options;
    /// "closed_form", "base_point", "random" or "custom".
    std::string init_kind;
    std::vector<std::string> notes;
    Timing timing;
};

PipelineReport run_analyze(const OdeSpec& spec);

/// Full pipeline.  Init comes from `init` when given, else from the
/// known solution, the spec's base-point values or a seeded random vector,
/// in that order of preference.  Throws SpecError without any source and
/// InsufficientData when rmax < 10 r0.
PipelineReport run_verify(const OdeSpec& spec, const InitProvider& init = {});

/// 0 on pass, 1 on a failed or missing verification.
int verify_exit_code(const PipelineReport& report);

/// Random values in the unit square for f, ..., f^(n-1) at z = r0.
std::vector<Complex> random_init(unsigned order, std::uint64_t seed, unsigned precision);

}  // namespace crg
