#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>
#include <mpfr.h>

#include "crg/numeric.hpp"

namespace crg {

namespace {

namespace mp = boost::multiprecision;
using Cvec = std::vector<Complex>;
using Series = std::vector<Cvec>;  // [m][i]: i-th Taylor coefficient of c_m

constexpr double kLn2 = 0.69314718055994530942;

long exponent2(const Real& x) {
    if (x == 0) return std::numeric_limits<long>::min();
    return static_cast<long>(mpfr_get_exp(x.backend().data()));
}

long exponent2(const Complex& z) { return std::max(exponent2(z.re), exponent2(z.im)); }

void scale2(Complex& z, long e) {
    mpfr_mul_2si(z.re.backend().data(), z.re.backend().data(), e, MPFR_RNDN);
    mpfr_mul_2si(z.im.backend().data(), z.im.backend().data(), e, MPFR_RNDN);
}

/// Copy re-rounded to the calling thread's precision.
Complex rounded(const Complex& z) {
    Complex out;
    mpfr_set(out.re.backend().data(), z.re.backend().data(), MPFR_RNDN);
    mpfr_set(out.im.backend().data(), z.im.backend().data(), MPFR_RNDN);
    return out;
}

bool finite(const Complex& z) { return mp::isfinite(z.re) && mp::isfinite(z.im); }

Rational factorial(unsigned n) {
    Rational out = 1;
    for (unsigned k = 2; k <= n; ++k) out *= k;
    return out;
}

Cvec solve(std::vector<Cvec> a, Cvec b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        Real best = max_abs_component(a[col][col]);
        for (std::size_t row = col + 1; row < n; ++row) {
            Real m = max_abs_component(a[row][col]);
            if (m > best) {
                best = m;
                pivot = row;
            }
        }
        if (best == 0) throw NumericBreakdown("singular step matrix");
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        Complex inv = Complex(1) / a[col][col];
        for (std::size_t row = col + 1; row < n; ++row) {
            Complex factor = a[row][col] * inv;
            if (factor.is_zero()) continue;
            for (std::size_t k = col + 1; k < n; ++k) a[row][k] -= factor * a[col][k];
            b[row] -= factor * b[col];
        }
    }
    Cvec x(n);
    for (std::size_t i = n; i-- > 0;) {
        Complex acc = b[i];
        for (std::size_t k = i + 1; k < n; ++k) acc -= a[i][k] * x[k];
        x[i] = acc / a[i][i];
    }
    return x;
}

/// Zeros of P_s(2t-1) - P_{s-1}(2t-1) on (0, 1]: the Radau IIA abscissae.
std::vector<Real> radau_nodes(unsigned s) {
    // Legendre coefficients in x by the three-term recurrence, exactly.
    std::vector<std::vector<Rational>> legendre{{Rational(1)}, {Rational(0), Rational(1)}};
    for (unsigned k = 1; k < s; ++k) {
        std::vector<Rational> next(k + 2);
        for (unsigned i = 0; i <= k; ++i) next[i + 1] += Rational(2 * k + 1, k + 1) * legendre[k][i];
        for (unsigned i = 0; i < k; ++i) next[i] -= Rational(k, k + 1) * legendre[k - 1][i];
        legendre.push_back(std::move(next));
    }
    std::vector<Rational> poly = legendre[s];
    for (std::size_t i = 0; i < legendre[s - 1].size(); ++i) poly[i] -= legendre[s - 1][i];
    std::vector<Real> coeffs;
    for (const auto& c : poly) coeffs.push_back(real_from(c));
    auto value = [&](const Real& x) {
        Real acc = 0;
        for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * x + coeffs[i];
        return acc;
    };
    // Bracket the real roots on a fine grid, then bisect to full precision.
    std::vector<Real> nodes;
    const unsigned grid = 4000;
    const unsigned bits = PrecisionScope::current_bits();
    Real prev_x = -1, prev_v = value(prev_x);
    for (unsigned g = 1; g <= grid; ++g) {
        Real x = Real(-1) + Real(2) * Real(g) / Real(grid);
        Real v = value(x);
        if (g == grid) {
            nodes.push_back(Real(1));
            break;
        }
        if ((prev_v < 0) != (v < 0) && v != 0) {
            Real lo = prev_x, hi = x;
            for (unsigned it = 0; it < bits + 8; ++it) {
                Real mid = (lo + hi) / 2;
                if ((value(mid) < 0) == (value(lo) < 0)) lo = mid;
                else hi = mid;
            }
            nodes.push_back((lo + hi) / 2);
        }
        prev_x = x;
        prev_v = v;
    }
    if (nodes.size() != s) throw std::logic_error("Radau node count mismatch");
    for (auto& x : nodes) x = (x + 1) / 2;
    return nodes;
}

/// Coefficients of the equation evaluated at a point, sharing one complex
/// exponential per distinct exponent polynomial.
/// Modes with |h l| above this are not resolved by a step of size h.
constexpr double kResolvedRadius = 5;

/// f'/f of a state in doubles; infinite when f vanishes.
std::complex<double> log_derivative(const std::vector<Complex>& y) {
    if (y.size() < 2) return {std::numeric_limits<double>::infinity(), 0};
    if (y[0].is_zero()) return {std::numeric_limits<double>::infinity(), 0};
    return (y[1] / y[0]).to_double();
}

/// A frozen mode the solution itself follows; its error and growth are real.
bool carried(std::complex<double> rate, std::complex<double> mu, std::size_t order) {
    return order == 1 || std::abs(rate - mu) < 0.5 * std::abs(rate);
}

class CoefficientEvaluator {
public:
    explicit CoefficientEvaluator(const LinearODE& eq) {
        std::vector<Poly> exps;
        for (const auto& c : eq.coefficients())
            for (const auto& t : c.terms())
                if (std::find(exps.begin(), exps.end(), t.exponent) == exps.end()) exps.push_back(t.exponent);
        for (const auto& q : exps) exponents_.push_back(to_real(q));
        mantissas_.assign(eq.coefficients().size(), std::vector<Cvec>(exps.size()));
        for (std::size_t m = 0; m < eq.coefficients().size(); ++m)
            for (const auto& t : eq.coefficients()[m].terms()) {
                auto k = static_cast<std::size_t>(std::find(exps.begin(), exps.end(), t.exponent) - exps.begin());
                mantissas_[m][k] = to_real(t.mantissa);
            }
    }

    Cvec operator()(const Complex& z) const {
        Cvec e;
        e.reserve(exponents_.size());
        for (const auto& q : exponents_) e.push_back(q.empty() ? Complex(1) : exp(horner(q, z)));
        Cvec out(mantissas_.size());
        for (std::size_t m = 0; m < mantissas_.size(); ++m)
            for (std::size_t k = 0; k < e.size(); ++k)
                if (!mantissas_[m][k].empty()) out[m] += horner(mantissas_[m][k], z) * e[k];
        return out;
    }

private:
    static Cvec to_real(const Poly& p) {
        Cvec out;
        for (const auto& c : p.coefficients()) out.emplace_back(c);
        return out;
    }
    static Complex horner(const Cvec& p, const Complex& z) {
        if (p.empty()) return Complex();
        Complex acc = p.back();
        for (std::size_t i = p.size() - 1; i-- > 0;) {
            acc *= z;
            acc += p[i];
        }
        return acc;
    }

    std::vector<Cvec> exponents_;
    std::vector<std::vector<Cvec>> mantissas_;  // [m][exponent]
};

struct StepResult {
    Cvec y1;
    /// u(z0 + t h) = sum_k alpha[k] t^k, the collocation polynomial.
    Cvec alpha;
    double error = std::numeric_limits<double>::infinity();
};

/// Collocation of the scalar equation at Radau IIA nodes: u is a
/// polynomial of degree n+s-1 matching f, ..., f^(n-1) at z0 and the
/// equation at s nodes.  The endpoint is a node, so stiff components land
/// on the reduced equation.  The error estimate compares with s-1 nodes.
class Stepper {
public:
    Stepper(const LinearODE& eq, const IntegratorConfig& config)
        : n_(eq.order()), coefficients_(eq), nodes_(radau_nodes(config.stages)),
          nodes_low_(radau_nodes(config.stages - 1)) {
        const unsigned top = n_ + config.stages;
        falling_.assign(top + 1, std::vector<Real>(n_ + 1));
        for (unsigned k = 0; k <= top; ++k)
            for (unsigned m = 0; m <= n_; ++m) {
                Real v = 1;
                for (unsigned i = 0; i < m; ++i) v *= Real(static_cast<int>(k) - static_cast<int>(i));
                falling_[k][m] = v;
            }
        for (unsigned j = 0; j <= n_; ++j) inv_factorial_.push_back(Real(1) / real_from(factorial(j)));
        tableau_ = tableau(nodes_);
    }

    unsigned order() const { return n_; }

    /// Roots of the frozen characteristic polynomial sum_m c_m(z) l^m.
    std::vector<std::complex<double>> local_rates(const Complex& z) const {
        Cvec c = coefficients_(z);
        if (c[n_].is_zero()) return {};
        Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(n_, n_);
        for (unsigned m = 0; m < n_; ++m) {
            std::complex<double> ratio = (c[m] / c[n_]).to_double();
            if (!std::isfinite(ratio.real()) || !std::isfinite(ratio.imag())) ratio = {1e300, 0};
            companion(0, n_ - 1 - m) = -ratio;
            if (m + 1 < n_) companion(m + 1, m) = 1.0;
        }
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(companion, false);
        auto values = solver.eigenvalues();
        return {values.data(), values.data() + values.size()};
    }

    /// log|R(w)| for the stability function R(w) = 1 + w b^T (I - w A)^-1 1.
    double log_amplification(std::complex<double> w) const {
        const auto s = tableau_.rows();
        Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(s, s) - w * tableau_;
        Eigen::VectorXcd x = m.partialPivLu().solve(Eigen::VectorXcd::Ones(s));
        return std::log(std::abs(1.0 + w * (tableau_.row(s - 1) * x)(0)));
    }

    StepResult attempt(const Complex& z0, const Cvec& y0, const Complex& h) const {
        StepResult out;
        Cvec hp(n_ + 1);
        hp[0] = Complex(1);
        for (unsigned k = 1; k <= n_; ++k) hp[k] = hp[k - 1] * h;
        Cvec known(n_);
        for (unsigned k = 0; k < n_; ++k) known[k] = y0[k] * hp[k] * inv_factorial_[k];

        Cvec alpha = collocate(z0, h, hp, known, nodes_);
        Cvec alpha_low = collocate(z0, h, hp, known, nodes_low_);
        if (alpha.empty() || alpha_low.empty()) return out;
        Cvec g1 = endpoint(alpha), g1_low = endpoint(alpha_low);
        Real scale = 0;
        for (unsigned j = 0; j < n_; ++j) {
            if (!finite(g1[j]) || !finite(g1_low[j])) throw NumericBreakdown("non-finite state");
            scale = mp::max(scale, max_abs_component(g1[j]));
        }
        if (scale == 0) return out;
        out.error = unresolved_free_error(g1, g1_low, scale, h.to_double(), local_rates(z0 + h), log_derivative(y0));
        out.y1.resize(n_);
        for (unsigned j = 0; j < n_; ++j) out.y1[j] = g1[j] / (hp[j] * inv_factorial_[j]);
        out.alpha = std::move(alpha);
        return out;
    }

private:
    /// Difference of the two solutions in f, relative to the state scale.
    /// Components along unresolved frozen modes carry no accuracy
    /// information and are removed first.
    double unresolved_free_error(const Cvec& g1, const Cvec& g1_low, const Real& scale, std::complex<double> h,
                                 const std::vector<std::complex<double>>& rates, std::complex<double> mu) const {
        const auto n = static_cast<Eigen::Index>(n_);
        Eigen::VectorXcd d(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            Complex v = g1[static_cast<std::size_t>(j)] - g1_low[static_cast<std::size_t>(j)];
            d(j) = {Real(v.re / scale).convert_to<double>(), Real(v.im / scale).convert_to<double>()};
        }
        std::vector<bool> fast(rates.size());
        bool any_fast = false;
        for (std::size_t k = 0; k < rates.size(); ++k)
            any_fast |= fast[k] = std::abs(h * rates[k]) > kResolvedRadius && !carried(rates[k], mu, n_);
        if (!any_fast || rates.size() != n_) return std::abs(d(0));
        Eigen::MatrixXcd modes(n, n);
        for (Eigen::Index k = 0; k < n; ++k) {
            const std::complex<double> w = h * rates[static_cast<std::size_t>(k)];
            std::complex<double> entry = 1;
            for (Eigen::Index j = 0; j < n; ++j) {
                modes(j, k) = entry;
                entry *= w / static_cast<double>(j + 1);
            }
        }
        Eigen::VectorXcd a = modes.colPivHouseholderQr().solve(d);
        std::complex<double> slow = d(0);
        for (Eigen::Index k = 0; k < n; ++k)
            if (fast[static_cast<std::size_t>(k)]) slow -= a(k);
        return std::isfinite(std::abs(slow)) ? std::abs(slow) : std::abs(d(0));
    }

    /// Empty when the collocation matrix is singular.
    Cvec collocate(const Complex& z0, const Complex& h, const Cvec& hp, const Cvec& known,
                   const std::vector<Real>& nodes) const {
        const std::size_t s = nodes.size();
        std::vector<Cvec> a(s, Cvec(s));
        Cvec b(s);
        Cvec weights(n_ + 1);
        for (std::size_t i = 0; i < s; ++i) {
            const Real& t = nodes[i];
            Cvec c = coefficients_(z0 + h * t);
            // h^n * sum_m c_m h^-m u^(m)(t), rows normalized by a power of two.
            long e = std::numeric_limits<long>::min();
            for (unsigned m = 0; m <= n_; ++m) {
                weights[m] = c[m] * hp[n_ - m];
                e = std::max(e, exponent2(weights[m]));
            }
            if (e == std::numeric_limits<long>::min()) return {};
            for (auto& w : weights) scale2(w, -e);
            std::vector<Real> tp(n_ + s + 1);
            tp[0] = 1;
            for (std::size_t k = 1; k < tp.size(); ++k) tp[k] = tp[k - 1] * t;
            for (std::size_t k = 0; k < n_ + s; ++k) {
                Complex entry;
                for (unsigned m = 0; m <= n_ && m <= k; ++m) {
                    if (weights[m].is_zero()) continue;
                    entry += weights[m] * (falling_[k][m] * tp[k - m]);
                }
                if (k < n_) b[i] -= entry * known[k];
                else a[i][k - n_] = std::move(entry);
            }
        }
        Cvec x;
        try {
            x = solve(std::move(a), std::move(b));
        } catch (const NumericBreakdown&) {
            return {};
        }
        Cvec alpha = known;
        alpha.insert(alpha.end(), x.begin(), x.end());
        return alpha;
    }

    /// h^j u^(j)(z0 + h) / j! for j < n.
    Cvec endpoint(const Cvec& alpha) const {
        Cvec g(n_);
        for (unsigned j = 0; j < n_; ++j)
            for (std::size_t k = j; k < alpha.size(); ++k) g[j] += alpha[k] * (falling_[k][j] * inv_factorial_[j]);
        return g;
    }

    /// Butcher matrix of the collocation method, in doubles.
    static Eigen::MatrixXcd tableau(const std::vector<Real>& nodes) {
        const auto s = static_cast<Eigen::Index>(nodes.size());
        Eigen::MatrixXd v(s, s), w(s, s);
        for (Eigen::Index i = 0; i < s; ++i) {
            const double c = nodes[static_cast<std::size_t>(i)].convert_to<double>();
            for (Eigen::Index k = 0; k < s; ++k) {
                v(i, k) = std::pow(c, static_cast<double>(k));
                w(i, k) = std::pow(c, static_cast<double>(k + 1)) / static_cast<double>(k + 1);
            }
        }
        return (w * v.inverse()).cast<std::complex<double>>();
    }

    unsigned n_;
    Eigen::MatrixXcd tableau_;
    CoefficientEvaluator coefficients_;
    std::vector<Real> nodes_, nodes_low_;
    std::vector<std::vector<Real>> falling_;  // [k][m] = k!/(k-m)!
    std::vector<Real> inv_factorial_;
};

struct PathState {
    Complex z;
    Cvec y;
    long scale_exp2 = 0;
    double h;
    std::size_t steps = 0;
    std::size_t rejected = 0;
};

/// Callback with the parameter interval of an accepted step.
using StepSink = std::function<void(double t0, double t1, const StepResult&, long scale_exp2)>;

/// Shrinks h so that modes left unresolved by the controller (|h l| above
/// kResolvedRadius) gain as little as possible per unit length.  Inside
/// the pole band of R a growing mode is amplified far beyond its true rate.
double limit_amplification(const Stepper& stepper, const std::vector<std::complex<double>>& rates,
                           std::complex<double> mu, const Complex& dir, double h) {
    const std::complex<double> d = dir.to_double();
    std::vector<std::complex<double>> fast;
    for (const auto& l : rates)
        if (h * std::abs(l) > kResolvedRadius && !carried(l, mu, rates.size())) fast.push_back(l * d);
    if (fast.empty()) return h;
    auto rate = [&](double step) {
        double worst = -std::numeric_limits<double>::infinity();
        for (const auto& l : fast) worst = std::max(worst, stepper.log_amplification(step * l) / step);
        return worst;
    };
    constexpr int kCandidates = 48;
    std::vector<double> steps(kCandidates), gains(kCandidates);
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < kCandidates; ++i) {
        steps[i] = h * std::pow(1e-3, static_cast<double>(i) / (kCandidates - 1));
        gains[i] = rate(steps[i]);
        best = std::min(best, gains[i]);
    }
    const double accept = std::max(best, 0.0) + 0.5;

    for (int i = 0; i < kCandidates; ++i)
        if (gains[i] <= accept) return steps[i];
    return h;
}

/// Advances from state.z along dir for a parameter length.  Returns false
/// (with a diagnostic) on step-size collapse.
bool walk(const Stepper& stepper, const IntegratorConfig& config, PathState& state,
          const Complex& dir, double length, const StepSink& sink, std::string& diagnostic) {
    double t = 0;
    std::vector<std::complex<double>> rates;
    bool rates_valid = false;
    const double exponent = 1.0 / (2.0 * config.stages - 2.0);
    while (t < length) {
        double h = std::min(state.h, length - t);
        if (length - t - h < 1e-12 * length) h = length - t;
        if (!rates_valid) {
            rates = stepper.local_rates(state.z);
            rates_valid = true;
        }
        h = limit_amplification(stepper, rates, log_derivative(state.y), dir, h);
        const bool clipped = h < state.h;
        if (state.steps + state.rejected >= config.max_steps) {
            std::ostringstream msg;
            msg << "step budget exhausted at |z| = " << abs(state.z).convert_to<double>();
            diagnostic = msg.str();
            return false;
        }
        StepResult step = stepper.attempt(state.z, state.y, dir * Real(h));
        const double err = step.error;
        const double tol = config.rel_tol;
        if (!(err <= tol)) {
            ++state.rejected;
            double factor = std::isfinite(err) && err > 0 ? 0.9 * std::pow(tol / err, exponent) : 0.25;
            state.h = h * std::clamp(factor, 0.1, 0.9);
            if (state.h < 1e-13 * std::max(1.0, abs(state.z).convert_to<double>())) {
                std::ostringstream msg;
                msg << "step-size collapse at |z| = " << abs(state.z).convert_to<double>();
                diagnostic = msg.str();
                return false;
            }
            continue;
        }
        ++state.steps;
        if (sink) sink(t, t + h, step, state.scale_exp2);
        t += h;
        state.z += dir * Real(h);
        rates_valid = false;
        state.y = std::move(step.y1);
        double factor = err > 0 ? 0.9 * std::pow(tol / err, exponent) : 4.0;
        double grown = h * std::clamp(factor, 0.2, 4.0);
        state.h = clipped ? std::max(grown, state.h) : grown;

        long e = std::numeric_limits<long>::min();
        for (const auto& v : state.y) e = std::max(e, exponent2(v));
        if (e != std::numeric_limits<long>::min() && std::abs(static_cast<double>(e) * kLn2) > config.rescale_threshold) {
            for (auto& v : state.y) scale2(v, -e);
            state.scale_exp2 += e;
        }
    }
    return true;
}

/// The collocation polynomial of one step in doubles, after a common
/// power-of-two normalization.
class PolySpan {
public:
    PolySpan(const StepResult& step, long scale_exp2) {
        long e = std::numeric_limits<long>::min();
        for (const auto& v : step.alpha) e = std::max(e, exponent2(v));
        if (e == std::numeric_limits<long>::min()) e = 0;
        log_offset_ = (static_cast<double>(e) + static_cast<double>(scale_exp2)) * kLn2;
        for (Complex v : step.alpha) {
            scale2(v, -e);
            alpha_.push_back(v.to_double());
        }
    }

    /// log| d^j/dt^j u(t) | including the normalization.
    double log_abs(double t, unsigned j) const {
        std::complex<double> acc = 0;
        for (std::size_t k = alpha_.size(); k-- > j;) {
            double c = 1;
            for (unsigned i = 0; i < j; ++i) c *= static_cast<double>(k - i);
            acc = acc * t + c * alpha_[k];
        }
        return std::log(std::abs(acc)) + log_offset_;
    }

private:
    std::vector<std::complex<double>> alpha_;
    double log_offset_ = 0;
};

std::vector<double> sample_radii(const IntegratorConfig& config) {
    std::vector<double> r(config.samples_per_ray);
    const double ratio = std::log(config.rmax / config.r0);
    for (unsigned k = 0; k < config.samples_per_ray; ++k)
        r[k] = config.r0 * std::exp(ratio * k / (config.samples_per_ray - 1));
    r.back() = config.rmax;
    return r;
}

double log_abs(const Complex& v, long scale_exp2) {
    if (v.is_zero()) return -std::numeric_limits<double>::infinity();
    return mp::log(abs(v)).convert_to<double>() + static_cast<double>(scale_exp2) * kLn2;
}

}  // namespace

void IntegratorConfig::validate() const {
    if (precision < 53) throw std::invalid_argument("precision must be at least 53 bits");
    if (!(rel_tol > 0) || !(abs_tol > 0)) throw std::invalid_argument("tolerances must be positive");
    if (!(rescale_threshold > 1)) throw std::invalid_argument("rescale threshold must exceed 1");
    if (!(r0 > 0) || !(rmax > r0)) throw std::invalid_argument("need 0 < r0 < rmax");
    if (samples_per_ray < 2) throw std::invalid_argument("need at least two samples per ray");
    if (stages < 3 || stages > 16) throw std::invalid_argument("collocation stages must lie in [3, 16]");
    if (!(initial_step > 0)) throw std::invalid_argument("initial step must be positive");
}

RayTrace integrate_ray(const LinearODE& eq, double theta, const std::vector<Complex>& init,
                       const IntegratorConfig& config) {
    config.validate();
    const unsigned n = eq.order();
    if (n == 0) throw std::invalid_argument("equation of order zero has no nontrivial solution");
    if (init.size() != n) throw std::invalid_argument("initial values must list f, ..., f^(n-1)");
    PrecisionScope scope(config.precision);

    RayTrace trace;
    trace.theta = theta;
    const std::vector<double> radii = sample_radii(config);
    Stepper stepper(eq, config);
    const Complex dir = Complex::polar(Real(1), Real(theta));
    PathState state;
    state.z = dir * Real(config.r0);
    for (const auto& v : init) state.y.push_back(rounded(v));
    state.h = config.initial_step;

    {
        TraceSample s{config.r0, log_abs(state.y[0], 0), {}};
        for (unsigned j = 1; j < n; ++j) s.log_abs_derivs.push_back(log_abs(state.y[j], 0));
        trace.samples.push_back(std::move(s));
    }
    std::size_t next = 1;
    StepSink sink = [&](double t0, double t1, const StepResult& step, long scale_exp2) {
        const double r_end = config.r0 + t1;
        if (next >= radii.size() || radii[next] > r_end + 1e-12) return;
        PolySpan span(step, scale_exp2);
        const double width = t1 - t0;
        while (next < radii.size() && radii[next] <= r_end + 1e-12) {
            const double s = std::clamp((radii[next] - config.r0 - t0) / width, 0.0, 1.0);
            TraceSample out{radii[next], span.log_abs(s, 0), {}};
            for (unsigned j = 1; j < n; ++j)
                out.log_abs_derivs.push_back(span.log_abs(s, j) - static_cast<double>(j) * std::log(width));
            trace.samples.push_back(std::move(out));
            ++next;
        }
    };
    std::string diagnostic;
    bool ok = walk(stepper, config, state, dir, config.rmax - config.r0, sink, diagnostic);
    trace.steps = state.steps;
    trace.rejected = state.rejected;
    if (!ok) {
        trace.truncated = true;
        trace.diagnostic = diagnostic;
    }
    trace.filtered.assign(trace.samples.size(), false);
    return trace;
}

RayTrace integrate_ray(const LinearODE& eq, double theta, const std::vector<std::complex<double>>& init,
                       const IntegratorConfig& config) {
    PrecisionScope scope(config.precision);
    std::vector<Complex> values;
    for (auto v : init) values.emplace_back(v);
    return integrate_ray(eq, theta, values, config);
}

std::vector<Complex> transport_on_arc(const LinearODE& eq, double radius, double from, double to,
                                      const std::vector<Complex>& values, const IntegratorConfig& config) {
    config.validate();
    const unsigned n = eq.order();
    if (values.size() != n) throw std::invalid_argument("initial values must list f, ..., f^(n-1)");
    PrecisionScope scope(config.precision);
    Stepper stepper(eq, config);
    PathState state;
    state.z = Complex::polar(Real(radius), Real(from));
    for (const auto& v : values) state.y.push_back(rounded(v));
    state.h = config.initial_step;
    // Chords of at most 0.3 rad keep the polygon within 1.2% of the circle.
    const double span = to - from;
    const unsigned chords = std::max(1u, static_cast<unsigned>(std::ceil(std::abs(span) / 0.3)));
    for (unsigned c = 0; c < chords; ++c) {
        const double b = c + 1 == chords ? to : from + span * (c + 1) / chords;
        const Complex target = Complex::polar(Real(radius), Real(b));
        // The chord length is walked in double; a second leg closes the
        // remaining gap so the values belong to the exact target point.
        for (int leg = 0; leg < 2; ++leg) {
            Complex delta = target - state.z;
            Real length = abs(delta);
            if (length == 0) break;
            Complex dir = delta * (Real(1) / length);
            std::string diagnostic;
            if (!walk(stepper, config, state, dir, length.convert_to<double>(), {}, diagnostic))
                throw NumericBreakdown("arc transport failed: " + diagnostic);
        }
    }
    for (auto& v : state.y) scale2(v, state.scale_exp2);
    return state.y;
}

std::vector<Complex> closed_form_init(const ExpPoly& f, const Complex& z0, unsigned n, unsigned precision_bits) {
    PrecisionScope scope(precision_bits);
    std::vector<Complex> out;
    ExpPoly d = f;
    Complex z = rounded(z0);
    for (unsigned k = 0; k < n; ++k) {
        Evaluation e = d.eval(z);
        if (e.overflow) throw std::range_error("closed form overflows at the initial point");
        out.push_back(e.value);
        d = d.derivative();
    }
    return out;
}

std::vector<std::complex<double>> closed_form_init(const ExpPoly& f, std::complex<double> z0, unsigned n) {
    std::vector<std::complex<double>> out;
    ExpPoly d = f;
    for (unsigned k = 0; k < n; ++k) {
        out.push_back(d.eval(z0));
        d = d.derivative();
    }
    return out;
}

}  // namespace crg
