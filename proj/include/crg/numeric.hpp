// Ray integration of linear ODEs, C0-style dip filtering, growth-order and
// indicator estimation, and matching against predicted indicator
// candidates.
#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "crg/asymptotics.hpp"
#include "crg/bignum.hpp"
#include "crg/decomposition.hpp"

namespace crg {

struct IntegratorConfig {
    unsigned precision = 128;
    double rel_tol = 1e-20;
    double abs_tol = 1e-300;
    /// Natural-log magnitude beyond which the state is rescaled by a power
    /// of two.
    double rescale_threshold = 50;
    double r0 = 1;
    double rmax = 30;
    unsigned samples_per_ray = 400;
    /// Radau IIA collocation nodes per step.
    unsigned stages = 14;
    double initial_step = 0.01;
    std::size_t max_steps = 200000;

    /// Throws std::invalid_argument on inconsistent settings.
    void validate() const;
};

struct TraceSample {
    double r;
    double log_abs_f;
    std::vector<double> log_abs_derivs;  // orders 1..n-1
};

struct RayTrace {
    double theta = 0;
    std::vector<TraceSample> samples;
    std::vector<bool> filtered;
    double filtered_fraction = 0;
    /// Set when integration stopped before rmax.
    bool truncated = false;
    std::string diagnostic;
    std::size_t steps = 0;
    std::size_t rejected = 0;
};

/// NaN or otherwise unrecoverable integration failure.
class NumericBreakdown : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Integrates along z = r e^{i theta}, r0 <= r <= rmax.  `init` holds
/// f, f', ..., f^(n-1) at r0 e^{i theta}.  Step-size collapse truncates the
/// trace with a diagnostic; NaN throws NumericBreakdown.
RayTrace integrate_ray(const LinearODE& eq, double theta, const std::vector<Complex>& init,
                       const IntegratorConfig& config);
RayTrace integrate_ray(const LinearODE& eq, double theta, const std::vector<std::complex<double>>& init,
                       const IntegratorConfig& config);

/// Carries f, ..., f^(n-1) from r e^{i from} to r e^{i to} along the
/// circle (counterclockwise when to > from).
std::vector<Complex> transport_on_arc(const LinearODE& eq, double radius, double from, double to,
                                      const std::vector<Complex>& values, const IntegratorConfig& config);

/// (f(z0), f'(z0), ..., f^(n-1)(z0)) at the given precision.
std::vector<Complex> closed_form_init(const ExpPoly& f, const Complex& z0, unsigned n, unsigned precision_bits);
std::vector<std::complex<double>> closed_form_init(const ExpPoly& f, std::complex<double> z0, unsigned n);

inline constexpr double kDropThreshold = 3.0;
inline constexpr std::size_t kDefaultFilterWindow = 15;

/// Marks samples more than drop_threshold * max(log r, 1) below the upper
/// envelope, the smaller of the maxima over the window/2 samples on each
/// side.  Non-finite samples are always marked.
RayTrace filter_c0(RayTrace trace, std::size_t window = kDefaultFilterWindow,
                   double drop_threshold = kDropThreshold);

class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Fits max_theta log|f(r e^{i theta})| ~ A r^rho + B over the upper half
/// of the radii.  Throws EstimationError when fewer than 8 rays are given,
/// a trace stops short of rmax, or every trace decays.
double estimate_order(const std::vector<RayTrace>& traces);

/// Fits log|f| ~ h r^rho + b over unfiltered samples in the upper half of
/// the radii and returns h.  Throws EstimationError with fewer than 10
/// usable samples.
double estimate_indicator(const RayTrace& trace, double rho);

enum class ExclusionReason { None, CriticalRay, LiftedCriticalRay, StokesRay, Uncovered };

std::string to_string(ExclusionReason reason);

struct ExceptionalDirection {
    double angle;
    ExclusionReason reason;
};

/// Critical and lifted critical rays of the tree plus every leaf's Stokes
/// rays.
std::vector<ExceptionalDirection> exceptional_directions(const DecompNode* root,
                                                         const std::vector<LeafAnalysis>& leaves);

enum class Selection { Match, Max };

struct VerifyOptions {
    double tolerance = 0.05;
    double exclusion_half_width = 0.15;
    double rho_tolerance = 0.15;
    Selection selection = Selection::Match;
};

struct ThetaResult {
    double theta;
    bool excluded = false;
    ExclusionReason reason = ExclusionReason::None;
    std::optional<double> h_hat;
    std::optional<IndicatorCandidate> matched;
    double predicted = 0;
    double error = 0;
    std::string note;
};

struct ExcludedZone {
    Sector sector;
    ExclusionReason reason;
};

struct VerificationReport {
    double rho_hat = 0;
    std::optional<double> rho;  // the candidate rho it rounded to
    std::vector<ThetaResult> per_theta;
    std::vector<ExcludedZone> excluded_zones;
    std::vector<RayTrace> traces;
    bool coherent = true;
    double max_error = 0;
    bool pass = false;
    std::vector<std::string> diagnostics;
};

/// Initial values at r0 e^{i theta} for each ray.
using InitProvider = std::function<std::vector<Complex>(double theta)>;

/// Init from a closed form, evaluated at each ray's starting point.
InitProvider closed_form_provider(const ExpPoly& f, unsigned order, const IntegratorConfig& config);
/// Init given once at z = r0 (theta = 0) and carried along |z| = r0.
InitProvider base_point_provider(const LinearODE& eq, std::vector<Complex> values, const IntegratorConfig& config);

/// Raised for a theta grid that lies entirely in excluded zones, or when
/// the estimated order matches no candidate.
class VerificationFailed : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Integrates every grid ray (in parallel), estimates rho and h(theta) and
/// matches them to the candidates.  A rho estimate far from every candidate
/// is reported as a failed verification (pass = false) with a diagnostic.
VerificationReport verify(const LinearODE& eq, const std::vector<IndicatorPiece>& candidates,
                          const std::vector<ExceptionalDirection>& exceptional, const std::vector<double>& theta_grid,
                          const InitProvider& init, const IntegratorConfig& config, const VerifyOptions& options = {});

/// n equally spaced angles starting at 0.
std::vector<double> uniform_grid(unsigned n);

}  // namespace crg
