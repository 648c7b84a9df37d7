#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>

#include "crg/numeric.hpp"

namespace crg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct LinearFit {
    Eigen::VectorXd coefficients;
    double residual = kInf;
};

LinearFit least_squares(const Eigen::MatrixXd& basis, const Eigen::VectorXd& y) {
    LinearFit fit;
    fit.coefficients = basis.colPivHouseholderQr().solve(y);
    fit.residual = (basis * fit.coefficients - y).squaredNorm();
    return fit;
}

/// h r^rho + b over the given samples.
LinearFit power_fit(const std::vector<double>& r, const std::vector<double>& y, double rho) {
    Eigen::MatrixXd basis(static_cast<Eigen::Index>(r.size()), 2);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(r.size()));
    for (std::size_t i = 0; i < r.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        basis(k, 0) = std::pow(r[i], rho);
        basis(k, 1) = 1;
        rhs(k) = y[i];
    }
    return least_squares(basis, rhs);
}

/// Lower r bound of the top `fraction` of a trace's radius range.
double top_range_start(const RayTrace& trace, double fraction) {
    const double lo = trace.samples.front().r, hi = trace.samples.back().r;
    return hi - fraction * (hi - lo);
}

std::string format_angle(double theta) {
    std::ostringstream out;
    out.precision(4);
    out << theta;
    return out.str();
}

}  // namespace

RayTrace filter_c0(RayTrace trace, std::size_t window, double drop_threshold) {
    const std::size_t n = trace.samples.size();
    trace.filtered.assign(n, false);
    if (n == 0) {
        trace.filtered_fraction = 0;
        return trace;
    }
    const std::size_t half = std::max<std::size_t>(window / 2, 1);
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double value = trace.samples[i].log_abs_f;
        if (!std::isfinite(value)) {
            trace.filtered[i] = true;
            ++count;
            continue;
        }
        // A dip must sit below its neighbours on both sides; one-sided
        // maxima keep steep monotone stretches unfiltered.
        double left = -kInf, right = -kInf;
        for (std::size_t j = i >= half ? i - half : 0; j < i; ++j) left = std::max(left, trace.samples[j].log_abs_f);
        for (std::size_t j = i + 1; j <= std::min(n - 1, i + half); ++j)
            right = std::max(right, trace.samples[j].log_abs_f);
        const double envelope = std::min(left, right);
        const double allowance = drop_threshold * std::max(std::log(trace.samples[i].r), 1.0);
        if (std::isfinite(envelope) && value < envelope - allowance) {
            trace.filtered[i] = true;
            ++count;
        }
    }
    trace.filtered_fraction = static_cast<double>(count) / static_cast<double>(n);
    return trace;
}

double estimate_order(const std::vector<RayTrace>& traces) {
    std::vector<const RayTrace*> complete;
    for (const auto& t : traces)
        if (!t.truncated && !t.samples.empty()) complete.push_back(&t);
    if (complete.size() < 8) throw EstimationError("order estimation needs at least 8 complete rays");
    const std::size_t n = complete.front()->samples.size();
    for (const auto* t : complete)
        if (t->samples.size() != n) throw EstimationError("traces sample different radii");

    const double start = top_range_start(*complete.front(), 0.5);
    std::vector<double> r, m;
    for (std::size_t i = 0; i < n; ++i) {
        const double radius = complete.front()->samples[i].r;
        if (radius < start) continue;
        double best = -kInf;
        for (const auto* t : complete) {
            const bool masked = i < t->filtered.size() && t->filtered[i];
            const double v = t->samples[i].log_abs_f;
            if (!masked && std::isfinite(v)) best = std::max(best, v);
        }
        if (best > 0) {
            r.push_back(radius);
            m.push_back(best);
        }
    }
    if (r.size() < 3) throw EstimationError("order estimation impossible: every trace decays");

    auto residual = [&](double log_rho) { return power_fit(r, m, std::exp(log_rho)).residual; };
    // Coarse scan, then Brent on the bracket around the best grid point.
    constexpr int kGrid = 60;
    const double lo = std::log(0.05), hi = std::log(12.0);
    int best = 0;
    double best_value = kInf;
    for (int k = 0; k <= kGrid; ++k) {
        const double v = residual(lo + (hi - lo) * k / kGrid);
        if (v < best_value) {
            best_value = v;
            best = k;
        }
    }
    const double a = lo + (hi - lo) * std::max(best - 1, 0) / kGrid;
    const double b = lo + (hi - lo) * std::min(best + 1, kGrid) / kGrid;
    const auto result = boost::math::tools::brent_find_minima(residual, a, b, 40);
    return std::exp(result.first);
}

double estimate_indicator(const RayTrace& trace, double rho) {
    if (!(rho > 0)) throw std::invalid_argument("rho must be positive");
    if (trace.samples.size() < 2) throw EstimationError("trace too short");
    const double start = top_range_start(trace, 0.5);
    std::vector<double> r, y;
    for (std::size_t i = 0; i < trace.samples.size(); ++i) {
        const auto& s = trace.samples[i];
        const bool masked = i < trace.filtered.size() && trace.filtered[i];
        if (s.r >= start && !masked && std::isfinite(s.log_abs_f)) {
            r.push_back(s.r);
            y.push_back(s.log_abs_f);
        }
    }
    if (r.size() < 10) throw EstimationError("fewer than 10 usable samples");
    return power_fit(r, y, rho).coefficients(0);
}

std::string to_string(ExclusionReason reason) {
    switch (reason) {
        case ExclusionReason::None: return "none";
        case ExclusionReason::CriticalRay: return "critical ray";
        case ExclusionReason::LiftedCriticalRay: return "lifted critical ray";
        case ExclusionReason::StokesRay: return "Stokes ray";
        case ExclusionReason::Uncovered: return "uncovered";
    }
    return "unknown";
}

std::vector<ExceptionalDirection> exceptional_directions(const DecompNode* root,
                                                         const std::vector<LeafAnalysis>& leaves) {
    std::vector<ExceptionalDirection> out;
    auto add = [&](double angle, ExclusionReason reason) {
        angle = normalize_angle(angle);
        for (const auto& d : out)
            if (angular_distance(d.angle, angle) < 1e-9) return;
        out.push_back({angle, reason});
    };
    if (root)
        for (const auto& ray : exceptional_rays(*root))
            add(ray.angle, ray.lifted ? ExclusionReason::LiftedCriticalRay : ExclusionReason::CriticalRay);
    for (const auto& leaf : leaves)
        for (const auto& s : leaf.stokes) add(s.angle, ExclusionReason::StokesRay);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.angle < b.angle; });
    return out;
}

InitProvider closed_form_provider(const ExpPoly& f, unsigned order, const IntegratorConfig& config) {
    return [f, order, config](double theta) {
        PrecisionScope scope(config.precision);
        return closed_form_init(f, Complex::polar(Real(config.r0), Real(theta)), order, config.precision);
    };
}

InitProvider base_point_provider(const LinearODE& eq, std::vector<Complex> values, const IntegratorConfig& config) {
    // Transport errors seed every solution of the equation, including ones
    // that grow doubly exponentially, so the arc runs near working precision.
    IntegratorConfig arc = config;
    arc.rel_tol = std::min(config.rel_tol, std::ldexp(1.0, -static_cast<int>(config.precision) + 12));
    return [eq, values = std::move(values), arc](double theta) {
        const double target = normalize_angle(theta);
        if (target == 0) return values;
        return transport_on_arc(eq, arc.r0, 0, target, values, arc);
    };
}

std::vector<double> uniform_grid(unsigned n) {
    std::vector<double> grid(n);
    for (unsigned k = 0; k < n; ++k) grid[k] = kTwoPi * k / n;
    return grid;
}

namespace {

struct Prediction {
    IndicatorCandidate candidate;
    double value;
};

/// Candidates of the piece containing theta, with lower-order branches
/// predicting 0 and higher-order ones dropped.
std::optional<std::vector<Prediction>> predictions_at(const std::vector<IndicatorPiece>& pieces, double theta,
                                                      const Rational& rho) {
    for (const auto& piece : pieces) {
        if (!piece.sector.contains(theta)) continue;
        std::vector<Prediction> out;
        for (const auto& c : piece.candidates) {
            if (c.rho == rho) out.push_back({c, c.h(theta)});
            else if (c.rho < rho) out.push_back({c, 0.0});
        }
        return out;
    }
    return std::nullopt;
}

/// Branch identity for the coherence check: the leading term, not the
/// leaf that happens to carry it.
std::pair<std::string, std::pair<long long, long long>> branch_key(const IndicatorCandidate& c) {
    return {c.rho.str(), {std::llround(c.a.real() * 1e9), std::llround(c.a.imag() * 1e9)}};
}

std::vector<RayTrace> integrate_all(const LinearODE& eq, const std::vector<double>& thetas, const InitProvider& init,
                                    const IntegratorConfig& config) {
    std::vector<RayTrace> traces(thetas.size());
    std::vector<std::exception_ptr> errors(thetas.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < thetas.size(); i = next++) {
            try {
                traces[i] = integrate_ray(eq, thetas[i], init(thetas[i]), config);
            } catch (const NumericBreakdown& e) {
                traces[i].theta = thetas[i];
                traces[i].truncated = true;
                traces[i].diagnostic = e.what();
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t threads =
        std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(thetas.size(), 1));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return traces;
}

}  // namespace

VerificationReport verify(const LinearODE& eq, const std::vector<IndicatorPiece>& candidates,
                          const std::vector<ExceptionalDirection>& exceptional, const std::vector<double>& theta_grid,
                          const InitProvider& init, const IntegratorConfig& config, const VerifyOptions& options) {
    config.validate();
    if (theta_grid.empty()) throw std::invalid_argument("empty theta grid");
    if (candidates.empty()) throw std::invalid_argument("no indicator candidates");

    VerificationReport report;
    const double delta = options.exclusion_half_width;
    for (const auto& d : exceptional)
        report.excluded_zones.push_back({Sector::from_bounds(d.angle - delta, d.angle + delta, false), d.reason});

    std::vector<double> active;
    for (double theta : theta_grid) {
        ThetaResult row;
        row.theta = theta;
        double nearest = kInf;
        for (const auto& d : exceptional) {
            const double dist = angular_distance(theta, d.angle);
            if (dist < delta && dist < nearest) {
                nearest = dist;
                row.excluded = true;
                row.reason = d.reason;
            }
        }
        if (!row.excluded) {
            const bool covered = std::any_of(candidates.begin(), candidates.end(),
                                             [&](const IndicatorPiece& p) { return p.sector.contains(theta); });
            if (!covered) {
                row.excluded = true;
                row.reason = ExclusionReason::Uncovered;
            }
        }
        if (!row.excluded) active.push_back(theta);
        report.per_theta.push_back(std::move(row));
    }
    if (active.empty()) throw VerificationFailed("every grid angle lies in an excluded zone");

    std::vector<RayTrace> traces = integrate_all(eq, active, init, config);
    for (auto& t : traces) t = filter_c0(std::move(t));

    report.pass = true;
    try {
        report.rho_hat = estimate_order(traces);
    } catch (const EstimationError& e) {
        report.diagnostics.push_back(std::string("order estimate: ") + e.what());
        report.pass = false;
        report.traces = std::move(traces);
        return report;
    }

    std::optional<Rational> rho;
    double gap = kInf;
    for (const auto& piece : candidates)
        for (const auto& c : piece.candidates) {
            const double d = std::abs(c.rho.convert_to<double>() - report.rho_hat);
            if (d < gap) {
                gap = d;
                rho = c.rho;
            }
        }
    if (!rho || gap > options.rho_tolerance) {
        std::ostringstream msg;
        msg << "estimated order " << report.rho_hat << " matches no candidate order within " << options.rho_tolerance;
        report.diagnostics.push_back(msg.str());
        report.pass = false;
        report.traces = std::move(traces);
        return report;
    }
    report.rho = rho->convert_to<double>();

    std::size_t k = 0;
    for (auto& row : report.per_theta) {
        if (row.excluded) continue;
        const RayTrace& trace = traces[k++];
        row.error = kInf;
        if (trace.truncated) {
            row.note = "integration stopped early: " + trace.diagnostic;
            continue;
        }
        try {
            row.h_hat = estimate_indicator(trace, *report.rho);
        } catch (const EstimationError& e) {
            row.note = e.what();
            continue;
        }
        auto preds = predictions_at(candidates, row.theta, *rho);
        if (!preds || preds->empty()) {
            row.note = "no candidate of order " + rho->str();
            continue;
        }
        const Prediction* chosen = nullptr;
        for (const auto& p : *preds) {
            if (!chosen) chosen = &p;
            else if (options.selection == Selection::Match
                         ? std::abs(p.value - *row.h_hat) < std::abs(chosen->value - *row.h_hat)
                         : p.value > chosen->value)
                chosen = &p;
        }
        row.matched = chosen->candidate;
        row.predicted = chosen->value;
        row.error = std::abs(*row.h_hat - chosen->value);
    }

    // Branch coherence between consecutive exceptional directions.
    std::vector<double> cuts;
    for (const auto& d : exceptional) cuts.push_back(d.angle);
    std::sort(cuts.begin(), cuts.end());
    auto sub_sector = [&](double theta) -> std::size_t {
        if (cuts.empty()) return 0;
        const double t = normalize_angle(theta);
        const auto it = std::upper_bound(cuts.begin(), cuts.end(), t);
        // Angles past the last cut wrap into the first sub-sector.
        return it == cuts.end() ? 0 : static_cast<std::size_t>(it - cuts.begin());
    };
    std::map<std::size_t, std::pair<std::pair<std::string, std::pair<long long, long long>>, double>> seen;
    for (const auto& row : report.per_theta) {
        if (row.excluded || !row.matched) continue;
        const auto key = branch_key(*row.matched);
        const auto s = sub_sector(row.theta);
        auto [it, fresh] = seen.try_emplace(s, key, row.theta);
        if (!fresh && it->second.first != key) {
            report.coherent = false;
            report.diagnostics.push_back("matched branch changes between theta = " + format_angle(it->second.second) +
                                         " and theta = " + format_angle(row.theta) +
                                         " with no exceptional ray in between");
        }
    }

    for (const auto& row : report.per_theta) {
        if (row.excluded) continue;
        report.max_error = std::max(report.max_error, row.error);
        if (!(row.error <= options.tolerance)) report.pass = false;
    }
    if (!report.coherent) report.pass = false;
    report.traces = std::move(traces);
    return report;
}

}  // namespace crg
