#include "crg/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace crg {

namespace {

// ----------------------------------------------------------------------------
//   Upper hull over (k, degree) with rational degrees
// ----------------------------------------------------------------------------

struct HullPoint {
    unsigned k;
    Rational d;
};

struct HullSegment {
    unsigned k_left;
    unsigned k_right;
    Rational slope;
};

std::vector<HullSegment> upper_hull(const std::vector<HullPoint>& points) {
    // points sorted by k ascending, distinct k.
    std::vector<HullPoint> chain;
    auto cross = [](const HullPoint& o, const HullPoint& a, const HullPoint& b) {
        return Rational(a.k - o.k) * (b.d - o.d) - (a.d - o.d) * Rational(b.k - o.k);
    };
    for (const auto& p : points) {
        while (chain.size() >= 2 && cross(chain[chain.size() - 2], chain.back(), p) >= 0) chain.pop_back();
        chain.push_back(p);
    }
    std::vector<HullSegment> out;
    for (std::size_t j = 0; j + 1 < chain.size(); ++j) {
        out.push_back({chain[j].k, chain[j + 1].k, (chain[j + 1].d - chain[j].d) / Rational(chain[j + 1].k - chain[j].k)});
    }
    return out;
}

bool on_segment(const HullSegment& s, unsigned k, const Rational& d, const Rational& d_left) {
    return k >= s.k_left && k <= s.k_right && d == d_left + s.slope * Rational(k - s.k_left);
}

// ----------------------------------------------------------------------------
//   Exact polynomial helpers (coefficients indexed by power)
// ----------------------------------------------------------------------------

using Coeffs = std::vector<ExactComplex>;

void trim(Coeffs& a) {
    while (!a.empty() && a.back().is_zero()) a.pop_back();
}

Coeffs derivative(const Coeffs& a) {
    Coeffs out;
    for (std::size_t k = 1; k < a.size(); ++k) out.push_back(a[k] * ExactComplex(static_cast<int>(k)));
    trim(out);
    return out;
}

std::pair<Coeffs, Coeffs> divmod(Coeffs a, const Coeffs& b) {
    if (b.empty()) throw std::domain_error("polynomial division by zero");
    trim(a);
    Coeffs q(a.size() >= b.size() ? a.size() - b.size() + 1 : 0);
    while (a.size() >= b.size() && !a.empty()) {
        std::size_t shift = a.size() - b.size();
        ExactComplex factor = a.back() / b.back();
        q[shift] = factor;
        for (std::size_t j = 0; j < b.size(); ++j) a[shift + j] -= factor * b[j];
        a.pop_back();
        trim(a);
    }
    trim(q);
    return {q, a};
}

Coeffs monic(Coeffs a) {
    trim(a);
    ExactComplex lead = a.back();
    for (auto& c : a) c /= lead;
    return a;
}

Coeffs gcd(Coeffs a, Coeffs b) {
    trim(a);
    trim(b);
    while (!b.empty()) {
        auto r = divmod(a, b).second;
        a = std::move(b);
        b = std::move(r);
    }
    return monic(a);
}

Coeffs sub(Coeffs a, const Coeffs& b) {
    if (a.size() < b.size()) a.resize(b.size());
    for (std::size_t k = 0; k < b.size(); ++k) a[k] -= b[k];
    trim(a);
    return a;
}

/// Yun's square-free factorization: (factor, multiplicity) with monic
/// factors of positive degree.
std::vector<std::pair<Coeffs, unsigned>> square_free(const Coeffs& f) {
    std::vector<std::pair<Coeffs, unsigned>> out;
    Coeffs fp = derivative(f);
    Coeffs b = gcd(f, fp);
    Coeffs c = divmod(f, b).first;
    Coeffs d = sub(divmod(fp, b).first, derivative(c));
    unsigned i = 1;
    while (c.size() > 1) {
        Coeffs a = gcd(c, d);
        if (a.size() > 1) out.emplace_back(a, i);
        c = divmod(c, a).first;
        d = sub(divmod(d, a).first, derivative(c));
        ++i;
    }
    return out;
}

ExactComplex eval_exact(const Coeffs& a, const ExactComplex& x) {
    ExactComplex acc;
    for (std::size_t k = a.size(); k-- > 0;) acc = acc * x + a[k];
    return acc;
}

// ----------------------------------------------------------------------------
//   Numeric root finding
// ----------------------------------------------------------------------------

Complex horner(const std::vector<Complex>& a, const Complex& x) {
    Complex acc;
    for (std::size_t k = a.size(); k-- > 0;) acc = acc * x + a[k];
    return acc;
}

std::vector<Complex> derivative(const std::vector<Complex>& a) {
    std::vector<Complex> out;
    for (std::size_t k = 1; k < a.size(); ++k) out.push_back(a[k] * Real(static_cast<int>(k)));
    return out;
}

std::vector<std::complex<double>> eigen_roots(const std::vector<Complex>& a) {
    const std::size_t deg = a.size() - 1;
    if (deg == 1) return {(-a[0] / a[1]).to_double()};
    Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(deg, deg);
    std::complex<double> lead = a[deg].to_double();
    for (std::size_t j = 0; j < deg; ++j) companion(0, j) = -a[deg - 1 - j].to_double() / lead;
    for (std::size_t j = 1; j < deg; ++j) companion(j, j - 1) = 1.0;
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(companion, false);
    std::vector<std::complex<double>> out(solver.eigenvalues().data(), solver.eigenvalues().data() + deg);
    return out;
}

Complex newton_polish(const std::vector<Complex>& a, Complex x) {
    const auto da = derivative(a);
    const Real tol = boost::multiprecision::ldexp(Real(1), -static_cast<int>(PrecisionScope::current_bits()) + 4);
    for (int iter = 0; iter < 60; ++iter) {
        Complex fx = horner(a, x);
        Complex dfx = horner(da, x);
        if (dfx.is_zero()) break;
        Complex step = fx / dfx;
        x -= step;
        Real mag = abs(x);
        if (abs(step) <= tol * (mag > 1 ? mag : Real(1))) break;
    }
    return x;
}

std::optional<Rational> rationalize(const Real& x, const Real& tol) {
    // Continued-fraction convergents with bounded denominators.
    Real rest = x;
    BigInt p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    for (int iter = 0; iter < 60; ++iter) {
        Real fl = boost::multiprecision::floor(rest);
        BigInt a(fl.convert_to<long long>());
        if (boost::multiprecision::abs(fl) > Real(1e15)) return std::nullopt;
        BigInt p2 = a * p1 + p0;
        BigInt q2 = a * q1 + q0;
        p0 = p1, q0 = q1, p1 = p2, q1 = q2;
        if (q1 > BigInt(1000000000)) return std::nullopt;
        Real approx = Real(p1.str()) / Real(q1.str());
        if (boost::multiprecision::abs(approx - x) <= tol) return Rational(p1, q1);
        Real frac = rest - fl;
        if (frac == 0) return Rational(p1, q1);
        rest = 1 / frac;
    }
    return std::nullopt;
}

std::optional<ExactComplex> exact_root(const Coeffs& factor, const Complex& x) {
    Real tol = boost::multiprecision::ldexp(Real(1), -static_cast<int>(PrecisionScope::current_bits()) / 2);
    auto re = rationalize(x.re, tol);
    auto im = rationalize(x.im, tol);
    if (!re || !im) return std::nullopt;
    ExactComplex candidate(*re, *im);
    if (eval_exact(factor, candidate).is_zero()) return candidate;
    return std::nullopt;
}

std::vector<Complex> to_numeric(const Coeffs& a) {
    std::vector<Complex> out;
    out.reserve(a.size());
    for (const auto& c : a) out.emplace_back(c);
    return out;
}

// ----------------------------------------------------------------------------
//   Numeric Puiseux polynomials with cancellation tracking
// ----------------------------------------------------------------------------

struct Coef {
    Complex value;
    Real scale;  // sum of the magnitudes that produced value
};

using Puiseux = std::map<Rational, Coef>;

void accumulate(Puiseux& into, const Rational& e, const Complex& v, const Real& scale) {
    auto it = into.find(e);
    if (it == into.end()) {
        into.emplace(e, Coef{v, scale});
    } else {
        it->second.value += v;
        it->second.scale += scale;
    }
}

Puiseux multiply(const Puiseux& a, const Puiseux& b) {
    Puiseux out;
    for (const auto& [ea, ca] : a) {
        for (const auto& [eb, cb] : b) accumulate(out, ea + eb, ca.value * cb.value, ca.scale * cb.scale);
    }
    return out;
}

Puiseux differentiate(const Puiseux& a) {
    Puiseux out;
    for (const auto& [e, c] : a) {
        if (e == 0) continue;
        Real factor = real_from(e);
        accumulate(out, e - 1, c.value * factor, c.scale * boost::multiprecision::abs(factor));
    }
    return out;
}

void clean(Puiseux& a) {
    const Real rel = boost::multiprecision::ldexp(Real(1), -static_cast<int>(PrecisionScope::current_bits()) + 24);
    for (auto it = a.begin(); it != a.end();) {
        if (abs(it->second.value) <= rel * it->second.scale) {
            it = a.erase(it);
        } else {
            ++it;
        }
    }
}

Puiseux from_poly(const Poly& p) {
    Puiseux out;
    for (unsigned k = 0; k <= p.degree(); ++k) {
        const auto& c = p.coefficient(k);
        if (c.is_zero()) continue;
        Complex v(c);
        out.emplace(Rational(k), Coef{v, abs(v)});
    }
    return out;
}

Rational degree_of(const Puiseux& a) { return a.rbegin()->first; }

/// Coefficients N_j (j = 0..max_j) of the equation for g after f = e^phi g.
std::vector<Puiseux> substituted(const std::vector<Poly>& coefficients, const std::vector<PuiseuxTerm>& phi,
                                 unsigned max_j) {
    Puiseux dphi;
    for (const auto& t : phi) {
        Real mu = real_from(t.mu);
        accumulate(dphi, t.mu - 1, t.a * mu, abs(t.a) * mu);
    }
    const unsigned n = static_cast<unsigned>(coefficients.size() - 1);
    std::vector<Puiseux> chain{Puiseux{{Rational(0), Coef{Complex(1), Real(1)}}}};
    for (unsigned m = 0; m < n; ++m) {
        Puiseux next = differentiate(chain.back());
        for (const auto& [e, c] : multiply(dphi, chain.back())) accumulate(next, e, c.value, c.scale);
        chain.push_back(std::move(next));
    }
    std::vector<Puiseux> out(max_j + 1);
    for (unsigned j = 0; j <= max_j && j <= n; ++j) {
        BigInt binom = 1;
        for (unsigned k = j; k <= n; ++k) {
            if (k > j) binom = binom * k / (k - j);
            if (coefficients[k].is_zero()) continue;
            Real weight(binom.str());
            for (const auto& [e, c] : multiply(from_poly(coefficients[k]), chain[k - j])) {
                accumulate(out[j], e, c.value * weight, c.scale * weight);
            }
        }
        clean(out[j]);
    }
    return out;
}

unsigned lcm_denominators(const std::vector<PuiseuxTerm>& terms) {
    BigInt l = 1;
    for (const auto& t : terms) {
        BigInt d = boost::multiprecision::denominator(t.mu);
        l = l / boost::multiprecision::gcd(l, d) * d;
    }
    return l.convert_to<unsigned>();
}

bool same_terms(const std::vector<PuiseuxTerm>& a, const std::vector<PuiseuxTerm>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t j = 0; j < a.size(); ++j) {
        if (a[j].mu != b[j].mu) return false;
        Real scale = std::max(abs(a[j].a), abs(b[j].a));
        if (abs(a[j].a - b[j].a) > Real(1e-25) * scale) return false;
    }
    return true;
}

struct Refiner {
    const std::vector<Poly>& coefficients;
    unsigned max_terms;
    std::vector<ExponentBranch> out;

    void finish(std::vector<PuiseuxTerm> terms, unsigned multiplicity, bool uncertain) {
        for (auto& b : out) {
            if (same_terms(b.puiseux, terms)) {
                b.multiplicity += multiplicity;
                b.log_correction = b.multiplicity > 1;
                b.multiplicity_uncertain = b.multiplicity_uncertain || uncertain;
                return;
            }
        }
        ExponentBranch b;
        b.puiseux = std::move(terms);
        b.p = lcm_denominators(b.puiseux);
        b.multiplicity = multiplicity;
        b.log_correction = multiplicity > 1;
        b.multiplicity_uncertain = uncertain;
        out.push_back(std::move(b));
    }

    void refine(std::vector<PuiseuxTerm> terms, const Rational& lambda_prev, unsigned multiplicity, bool uncertain) {
        if (terms.size() >= max_terms) {
            finish(std::move(terms), multiplicity, uncertain);
            return;
        }
        auto n = substituted(coefficients, terms, multiplicity);
        if (n[0].empty()) {
            finish(std::move(terms), multiplicity, uncertain);
            return;
        }
        std::vector<HullPoint> points;
        for (unsigned j = 0; j <= multiplicity; ++j) {
            if (!n[j].empty()) points.push_back({j, degree_of(n[j])});
        }
        if (points.back().k != multiplicity) {
            // Leading balance lost to cancellation noise; stop here.
            finish(std::move(terms), multiplicity, true);
            return;
        }
        unsigned settled = 0;
        for (const auto& seg : upper_hull(points)) {
            Rational lambda = -seg.slope;
            if (lambda <= -1 || lambda >= lambda_prev) {
                settled += seg.k_right - seg.k_left;
                continue;
            }
            Rational mu = lambda + 1;
            Rational d_left;
            for (const auto& p : points) {
                if (p.k == seg.k_left) d_left = p.d;
            }
            std::vector<Complex> poly(seg.k_right - seg.k_left + 1);
            for (const auto& p : points) {
                if (on_segment(seg, p.k, p.d, d_left)) poly[p.k - seg.k_left] = n[p.k].at(p.d).value;
            }
            Real cluster = boost::multiprecision::ldexp(Real(1), -static_cast<int>(PrecisionScope::current_bits()) / 2);
            for (const auto& root : numeric_roots(poly, cluster)) {
                auto next = terms;
                Complex a = root.value / Complex(real_from(mu));
                next.push_back({mu, a, std::nullopt});
                refine(std::move(next), lambda, root.multiplicity, uncertain || root.multiplicity_uncertain);
            }
        }
        if (settled > 0) finish(terms, settled, uncertain);
    }
};

Puiseux full_phi_residual(const std::vector<Poly>& coefficients, const std::vector<PuiseuxTerm>& phi) {
    return substituted(coefficients, phi, 0)[0];
}

}  // namespace

// ----------------------------------------------------------------------------
//   Newton polygon
// ----------------------------------------------------------------------------

std::vector<NewtonSegment> NewtonPolygon::admissible_segments() const {
    std::vector<NewtonSegment> out;
    for (const auto& s : segments) {
        if (s.admissible()) out.push_back(s);
    }
    return out;
}

unsigned NewtonPolygon::root_count() const {
    unsigned total = k_min;
    for (const auto& s : segments) total += s.length();
    return total;
}

NewtonPolygon newton_polygon(const std::vector<Poly>& coefficients) {
    if (coefficients.empty() || coefficients.back().is_zero()) {
        throw std::invalid_argument("Newton polygon needs a nonzero leading coefficient");
    }
    NewtonPolygon poly;
    poly.order = static_cast<unsigned>(coefficients.size() - 1);
    std::vector<HullPoint> points;
    for (unsigned k = 0; k < coefficients.size(); ++k) {
        if (coefficients[k].is_zero()) continue;
        poly.points.push_back({k, coefficients[k].degree()});
        points.push_back({k, Rational(coefficients[k].degree())});
    }
    poly.k_min = poly.points.front().k;
    for (const auto& s : upper_hull(points)) poly.segments.push_back({s.k_left, s.k_right, s.slope});
    return poly;
}

NewtonPolygon newton_polygon(const FundamentalDE& de) { return newton_polygon(de.coefficients); }

// ----------------------------------------------------------------------------
//   Characteristic roots
// ----------------------------------------------------------------------------

std::vector<CharacteristicRoot> numeric_roots(const std::vector<Complex>& coefficients, const Real& cluster_radius) {
    std::vector<Complex> a = coefficients;
    while (!a.empty() && a.back().is_zero()) a.pop_back();
    if (a.size() < 2) return {};
    std::vector<CharacteristicRoot> out;
    std::vector<Complex> polished;
    for (auto r : eigen_roots(a)) polished.push_back(newton_polish(a, Complex(r)));
    std::vector<bool> used(polished.size(), false);
    for (std::size_t i = 0; i < polished.size(); ++i) {
        if (used[i]) continue;
        std::vector<std::size_t> cluster{i};
        used[i] = true;
        for (std::size_t j = i + 1; j < polished.size(); ++j) {
            if (used[j]) continue;
            Real scale = std::max(abs(polished[i]), Real(1));
            // Multiple roots only polish to about half precision; merge at
            // the coarser radius and confirm against derivatives.
            if (abs(polished[i] - polished[j]) <= boost::multiprecision::sqrt(cluster_radius) * scale) {
                cluster.push_back(j);
                used[j] = true;
            }
        }
        CharacteristicRoot root;
        Complex mean;
        for (auto j : cluster) mean += polished[j];
        mean = mean / Complex(static_cast<int>(cluster.size()));
        root.multiplicity = static_cast<unsigned>(cluster.size());
        if (cluster.size() > 1) {
            std::vector<Complex> d = a;
            for (std::size_t k = 1; k < cluster.size(); ++k) d = derivative(d);
            mean = newton_polish(d, mean);
            Real spread = 0;
            for (auto j : cluster) spread = std::max(spread, abs(polished[j] - mean));
            root.multiplicity_uncertain = spread > cluster_radius * std::max(abs(mean), Real(1));
            // Stronger confirmation: lower derivatives vanish at the mean.
            std::vector<Complex> dj = a;
            Real a_scale = 0;
            for (const auto& c : a) a_scale = std::max(a_scale, abs(c));
            for (std::size_t k = 0; k + 1 < cluster.size(); ++k) {
                if (abs(horner(dj, mean)) > cluster_radius * a_scale * Real(1e6)) root.multiplicity_uncertain = true;
                dj = derivative(dj);
            }
        }
        root.value = mean;
        out.push_back(std::move(root));
    }
    return out;
}

std::vector<CharacteristicRoot> characteristic_roots(const std::vector<Poly>& coefficients,
                                                     const NewtonSegment& segment, unsigned precision_bits) {
    if (!segment.admissible()) throw std::invalid_argument("characteristic roots need an admissible segment");
    PrecisionScope scope(precision_bits);
    Coeffs poly(segment.length() + 1);
    const Rational d_left(coefficients.at(segment.k_left).degree());
    HullSegment hs{segment.k_left, segment.k_right, segment.slope};
    for (unsigned k = segment.k_left; k <= segment.k_right; ++k) {
        const auto& c = coefficients[k];
        if (c.is_zero()) continue;
        if (on_segment(hs, k, Rational(c.degree()), d_left)) poly[k - segment.k_left] = c.leading();
    }
    trim(poly);
    std::vector<CharacteristicRoot> out;
    for (const auto& [factor, multiplicity] : square_free(poly)) {
        auto numeric = to_numeric(factor);
        for (auto r : eigen_roots(numeric)) {
            CharacteristicRoot root;
            root.value = newton_polish(numeric, Complex(r));
            root.exact = exact_root(factor, root.value);
            if (root.exact) root.value = Complex(*root.exact);
            root.multiplicity = multiplicity;
            out.push_back(std::move(root));
        }
    }
    std::sort(out.begin(), out.end(), [](const CharacteristicRoot& a, const CharacteristicRoot& b) {
        if (a.value.re != b.value.re) return a.value.re < b.value.re;
        return a.value.im < b.value.im;
    });
    return out;
}

std::vector<CharacteristicRoot> characteristic_roots(const FundamentalDE& de, const NewtonSegment& segment,
                                                     unsigned precision_bits) {
    return characteristic_roots(de.coefficients, segment, precision_bits);
}

// ----------------------------------------------------------------------------
//   Exponent branches
// ----------------------------------------------------------------------------

double ExponentBranch::indicator(double theta) const {
    const auto& t = leading();
    double rho = to_double(t.mu);
    return (t.approx() * std::polar(1.0, rho * normalize_angle(theta))).real();
}

double ExponentBranch::growth(double r, double theta) const {
    double acc = 0;
    for (const auto& t : puiseux) {
        double mu = to_double(t.mu);
        acc += (t.approx() * std::polar(std::pow(r, mu), mu * normalize_angle(theta))).real();
    }
    return acc;
}

std::string to_string(const ExponentBranch& branch) {
    std::string out;
    for (const auto& t : branch.puiseux) {
        if (!out.empty()) out += " + ";
        std::string coef;
        if (t.exact) {
            coef = to_string(*t.exact);
        } else {
            auto a = t.approx();
            coef = "(" + std::to_string(a.real()) + (a.imag() < 0 ? "-" : "+") + std::to_string(std::abs(a.imag())) + "i)";
        }
        out += coef + "*z^(" + to_string(t.mu) + ")";
    }
    return out;
}

std::vector<ExponentBranch> exponents(const FundamentalDE& de, unsigned refine_depth, unsigned precision_bits) {
    PrecisionScope scope(precision_bits);
    auto polygon = newton_polygon(de);
    Refiner refiner{de.coefficients, refine_depth + 1, {}};
    for (const auto& seg : polygon.admissible_segments()) {
        Rational mu = seg.mu();
        for (const auto& root : characteristic_roots(de, seg, precision_bits)) {
            PuiseuxTerm lead;
            lead.mu = mu;
            if (root.exact) {
                lead.exact = *root.exact / ExactComplex(mu);
                lead.a = Complex(*lead.exact);
            } else {
                lead.a = root.value / Complex(real_from(mu));
            }
            refiner.refine({lead}, seg.lambda(), root.multiplicity, root.multiplicity_uncertain);
        }
    }
    // Later terms that happen to be Gaussian rationals are reported exactly.
    Real tol = boost::multiprecision::ldexp(Real(1), -static_cast<int>(precision_bits) / 2);
    for (auto& b : refiner.out) {
        for (auto& t : b.puiseux) {
            if (t.exact) continue;
            auto re = rationalize(t.a.re, tol);
            auto im = rationalize(t.a.im, tol);
            if (re && im && boost::multiprecision::denominator(*re) < 1000 &&
                boost::multiprecision::denominator(*im) < 1000) {
                ExactComplex candidate(*re, *im);
                if (abs(Complex(candidate) - t.a) <= tol * tol) t.exact = candidate;
            }
        }
    }
    return refiner.out;
}

std::optional<Rational> residual_degree_drop(const FundamentalDE& de, const ExponentBranch& branch) {
    PrecisionScope scope(kDefaultRootPrecision);
    const Rational lambda = branch.leading().mu - 1;
    std::optional<Rational> beta;
    for (unsigned k = 0; k < de.coefficients.size(); ++k) {
        if (de.coefficients[k].is_zero()) continue;
        Rational v = Rational(de.coefficients[k].degree()) + lambda * Rational(k);
        if (!beta || v > *beta) beta = v;
    }
    auto residual = full_phi_residual(de.coefficients, branch.puiseux);
    if (residual.empty()) return std::nullopt;
    return *beta - degree_of(residual);
}

// ----------------------------------------------------------------------------
//   Stokes rays and candidates
// ----------------------------------------------------------------------------

std::vector<StokesRay> stokes_rays(const std::vector<ExponentBranch>& branches, const Sector& sector) {
    std::vector<StokesRay> out;
    for (std::size_t i = 0; i < branches.size(); ++i) {
        for (std::size_t j = i + 1; j < branches.size(); ++j) {
            const auto& a = branches[i].puiseux;
            const auto& b = branches[j].puiseux;
            // Walk both term lists in descending mu.
            std::size_t ia = 0, ib = 0;
            std::optional<std::pair<Rational, std::complex<double>>> diff;
            std::size_t level = 0;
            while (ia < a.size() || ib < b.size()) {
                Rational mu;
                std::complex<double> va = 0, vb = 0;
                if (ib >= b.size() || (ia < a.size() && a[ia].mu > b[ib].mu)) {
                    mu = a[ia].mu;
                    va = a[ia++].approx();
                } else if (ia >= a.size() || b[ib].mu > a[ia].mu) {
                    mu = b[ib].mu;
                    vb = b[ib++].approx();
                } else {
                    mu = a[ia].mu;
                    va = a[ia++].approx();
                    vb = b[ib++].approx();
                }
                double scale = std::max({std::abs(va), std::abs(vb), 1e-300});
                if (std::abs(va - vb) > 1e-14 * scale) {
                    diff = std::make_pair(mu, va - vb);
                    break;
                }
                ++level;
            }
            if (!diff) throw std::invalid_argument("identical branches have no Stokes rays");
            const double mu = to_double(diff->first);
            const double phase = std::arg(diff->second);
            // mu * theta = pi/2 + k pi - phase, theta in [0, 2pi)
            int k_lo = static_cast<int>(std::floor((phase - kPi / 2) / kPi)) - 1;
            int k_hi = static_cast<int>(std::ceil((kTwoPi * mu + phase - kPi / 2) / kPi)) + 1;
            for (int k = k_lo; k <= k_hi; ++k) {
                double theta = (kPi / 2 + k * kPi - phase) / mu;
                if (theta < 0 || theta >= kTwoPi) continue;
                if (!sector.contains(theta)) continue;
                out.push_back({theta, i, j, level, diff->first});
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const StokesRay& x, const StokesRay& y) { return x.angle < y.angle; });
    return out;
}

LeafAnalysis analyze_leaf(const FundamentalDE& leaf, unsigned refine_depth, unsigned precision_bits) {
    LeafAnalysis out;
    out.leaf = leaf;
    out.polygon = newton_polygon(leaf);
    out.branches = exponents(leaf, refine_depth, precision_bits);
    for (const auto& sector : leaf.validity) {
        if (out.branches.size() < 2) break;
        auto rays = stokes_rays(out.branches, sector);
        out.stokes.insert(out.stokes.end(), rays.begin(), rays.end());
    }
    std::sort(out.stokes.begin(), out.stokes.end(),
              [](const StokesRay& x, const StokesRay& y) { return x.angle < y.angle; });
    return out;
}

double IndicatorCandidate::h(double theta) const {
    return (a * std::polar(1.0, to_double(rho) * normalize_angle(theta))).real();
}

std::string IndicatorCandidate::id() const { return "L" + std::to_string(leaf) + "B" + std::to_string(branch); }

std::vector<IndicatorPiece> indicator_candidates(const std::vector<LeafAnalysis>& leaves) {
    std::vector<IndicatorPiece> out;
    for (std::size_t l = 0; l < leaves.size(); ++l) {
        const auto& la = leaves[l];
        std::vector<IndicatorCandidate> candidates;
        for (std::size_t b = 0; b < la.branches.size(); ++b) {
            const auto& t = la.branches[b].leading();
            candidates.push_back({t.mu, t.approx(), l, b});
        }
        for (const auto& sector : la.leaf.validity) {
            // Cut points strictly inside the sector, in unwrapped angle.
            std::vector<double> cuts;
            for (const auto& ray : la.stokes) {
                double offset = normalize_angle(ray.angle - sector.lo);
                if (offset > 1e-12 && offset < sector.width() - 1e-12) cuts.push_back(sector.lo + offset);
            }
            std::sort(cuts.begin(), cuts.end());
            cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
            double lo = sector.lo;
            for (double cut : cuts) {
                out.push_back({Sector::from_bounds(lo, cut, sector.closed), l, candidates});
                lo = cut;
            }
            out.push_back({Sector::from_bounds(lo, sector.hi, sector.closed), l, candidates});
        }
    }
    return out;
}

}  // namespace crg
