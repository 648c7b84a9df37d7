#include "crg/exppoly.hpp"

#include <algorithm>
#include <stdexcept>

namespace crg {

// ----------------------------------------------------------------------------
//   Poly
// ----------------------------------------------------------------------------

Poly::Poly(ExactComplex constant) {
    if (!constant.is_zero()) coeffs_.push_back(std::move(constant));
}

Poly::Poly(std::vector<ExactComplex> coefficients) : coeffs_(std::move(coefficients)) { trim(); }

Poly Poly::z() { return monomial(ExactComplex(1), 1); }

Poly Poly::monomial(ExactComplex c, unsigned power) {
    std::vector<ExactComplex> coeffs(power + 1);
    coeffs[power] = std::move(c);
    return Poly(std::move(coeffs));
}

void Poly::trim() {
    while (!coeffs_.empty() && coeffs_.back().is_zero()) coeffs_.pop_back();
}

ExactComplex Poly::coefficient(unsigned power) const {
    return power < coeffs_.size() ? coeffs_[power] : ExactComplex();
}

Poly Poly::derivative() const {
    if (coeffs_.size() <= 1) return {};
    std::vector<ExactComplex> out(coeffs_.size() - 1);
    for (std::size_t k = 1; k < coeffs_.size(); ++k) {
        out[k - 1] = coeffs_[k] * ExactComplex(static_cast<int>(k));
    }
    return Poly(std::move(out));
}

Poly Poly::truncated_below(unsigned power) const {
    std::vector<ExactComplex> out(coeffs_.begin(), coeffs_.begin() + std::min<std::size_t>(power, coeffs_.size()));
    return Poly(std::move(out));
}

Poly Poly::operator-() const {
    Poly out = *this;
    for (auto& c : out.coeffs_) c = -c;
    return out;
}

Poly& Poly::operator+=(const Poly& o) {
    if (o.coeffs_.size() > coeffs_.size()) coeffs_.resize(o.coeffs_.size());
    for (std::size_t k = 0; k < o.coeffs_.size(); ++k) coeffs_[k] += o.coeffs_[k];
    trim();
    return *this;
}

Poly& Poly::operator-=(const Poly& o) {
    if (o.coeffs_.size() > coeffs_.size()) coeffs_.resize(o.coeffs_.size());
    for (std::size_t k = 0; k < o.coeffs_.size(); ++k) coeffs_[k] -= o.coeffs_[k];
    trim();
    return *this;
}

Poly operator*(const Poly& a, const Poly& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<ExactComplex> out(a.coeffs_.size() + b.coeffs_.size() - 1);
    for (std::size_t i = 0; i < a.coeffs_.size(); ++i) {
        if (a.coeffs_[i].is_zero()) continue;
        for (std::size_t j = 0; j < b.coeffs_.size(); ++j) {
            out[i + j] += a.coeffs_[i] * b.coeffs_[j];
        }
    }
    return Poly(std::move(out));
}

std::complex<double> Poly::eval(std::complex<double> z) const {
    std::complex<double> acc = 0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * z + it->to_complex();
    return acc;
}

Complex Poly::eval(const Complex& z) const {
    Complex acc;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
        acc *= z;
        acc += Complex(*it);
    }
    return acc;
}

std::vector<Complex> Poly::shifted(const Complex& center) const {
    // Repeated synthetic division (Horner's shift).
    std::vector<Complex> c;
    c.reserve(coeffs_.size());
    for (const auto& x : coeffs_) c.emplace_back(x);
    const std::size_t n = c.size();
    for (std::size_t k = 0; k + 1 < n; ++k) {
        for (std::size_t j = n - 1; j > k; --j) {
            c[j - 1] += center * c[j];
        }
    }
    return c;
}

Poly pow(const Poly& base, unsigned n) {
    Poly result(ExactComplex(1));
    Poly b = base;
    while (n > 0) {
        if (n & 1U) result = result * b;
        n >>= 1U;
        if (n > 0) b = b * b;
    }
    return result;
}

std::string to_string(const Poly& p) {
    if (p.is_zero()) return "0";
    std::string out;
    const auto& c = p.coefficients();
    for (std::size_t k = c.size(); k-- > 0;) {
        if (c[k].is_zero()) continue;
        std::string coef = to_string(c[k]);
        bool negative = coef.front() == '-';
        if (negative) coef.erase(0, 1);
        if (out.empty()) {
            if (negative) out += "-";
        } else {
            out += negative ? " - " : " + ";
        }
        if (k == 0) {
            out += coef;
            continue;
        }
        if (coef != "1") out += coef + "*";
        out += "z";
        if (k > 1) out += "^" + std::to_string(k);
    }
    return out;
}

bool exponent_less(const Poly& a, const Poly& b) {
    if (a.degree() != b.degree()) return a.degree() < b.degree();
    if (a.is_zero() != b.is_zero()) return a.is_zero();
    for (unsigned k = a.degree() + 1; k-- > 0;) {
        auto ca = a.coefficient(k);
        auto cb = b.coefficient(k);
        if (ca != cb) return ca < cb;
    }
    return false;
}

// ----------------------------------------------------------------------------
//   ExpPoly
// ----------------------------------------------------------------------------

ExpPoly::ExpPoly(ExactComplex constant) : ExpPoly(Poly(std::move(constant))) {}

ExpPoly::ExpPoly(Poly polynomial) {
    if (!polynomial.is_zero()) terms_.push_back({std::move(polynomial), Poly()});
}

ExpPoly::ExpPoly(std::vector<ExpPolyTerm> terms) : terms_(std::move(terms)) { canonicalize(); }

ExpPoly ExpPoly::exp_of(const Poly& exponent) { return ExpPoly(std::vector<ExpPolyTerm>{{Poly(ExactComplex(1)), exponent}}); }

void ExpPoly::canonicalize() {
    std::stable_sort(terms_.begin(), terms_.end(),
                     [](const ExpPolyTerm& a, const ExpPolyTerm& b) { return exponent_less(a.exponent, b.exponent); });
    std::vector<ExpPolyTerm> merged;
    for (auto& t : terms_) {
        if (!merged.empty() && merged.back().exponent == t.exponent) {
            merged.back().mantissa += t.mantissa;
        } else {
            merged.push_back(std::move(t));
        }
    }
    std::erase_if(merged, [](const ExpPolyTerm& t) { return t.mantissa.is_zero(); });
    terms_ = std::move(merged);
}

bool ExpPoly::is_polynomial() const {
    return std::all_of(terms_.begin(), terms_.end(), [](const ExpPolyTerm& t) { return t.exponent.is_zero(); });
}

Poly ExpPoly::as_polynomial() const {
    if (!is_polynomial()) throw std::logic_error("exponential polynomial has exponential terms");
    return terms_.empty() ? Poly() : terms_.front().mantissa;
}

unsigned ExpPoly::exponent_degree() const {
    unsigned s = 0;
    for (const auto& t : terms_) s = std::max(s, t.exponent.degree());
    return s;
}

ExpPoly ExpPoly::operator-() const {
    ExpPoly out = *this;
    for (auto& t : out.terms_) t.mantissa = -t.mantissa;
    return out;
}

ExpPoly& ExpPoly::operator+=(const ExpPoly& o) {
    terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
    canonicalize();
    return *this;
}

ExpPoly& ExpPoly::operator-=(const ExpPoly& o) { return *this += -o; }

ExpPoly operator*(const ExpPoly& a, const ExpPoly& b) {
    std::vector<ExpPolyTerm> out;
    out.reserve(a.terms_.size() * b.terms_.size());
    for (const auto& ta : a.terms_) {
        for (const auto& tb : b.terms_) {
            out.push_back({ta.mantissa * tb.mantissa, ta.exponent + tb.exponent});
        }
    }
    return ExpPoly(std::move(out));
}

ExpPoly ExpPoly::derivative() const {
    std::vector<ExpPolyTerm> out;
    out.reserve(terms_.size());
    for (const auto& t : terms_) {
        out.push_back({t.mantissa.derivative() + t.mantissa * t.exponent.derivative(), t.exponent});
    }
    return ExpPoly(std::move(out));
}

ExpPoly ExpPoly::times_exp(const Poly& shift) const {
    std::vector<ExpPolyTerm> out = terms_;
    for (auto& t : out) t.exponent += shift;
    return ExpPoly(std::move(out));
}

std::complex<double> ExpPoly::eval(std::complex<double> z) const {
    std::complex<double> acc = 0;
    for (const auto& t : terms_) acc += t.mantissa.eval(z) * std::exp(t.exponent.eval(z));
    return acc;
}

namespace {

// Natural-log bound of the MPFR exponent range, with headroom.
Real log_range_limit() {
    static const double limit = static_cast<double>(mpfr_get_emax()) * 0.6931471805599453 * 0.95;
    return Real(limit);
}

}  // namespace

Evaluation ExpPoly::eval(const Complex& z) const {
    Evaluation out;
    if (terms_.empty()) {
        out.log_form = {Real(-std::numeric_limits<double>::infinity()), Real(0)};
        return out;
    }
    std::vector<Complex> exponents;
    std::vector<Complex> mantissas;
    exponents.reserve(terms_.size());
    Real max_re = 0;
    bool first = true;
    for (const auto& t : terms_) {
        exponents.push_back(t.exponent.eval(z));
        mantissas.push_back(t.mantissa.eval(z));
        if (first || exponents.back().re > max_re) max_re = exponents.back().re;
        first = false;
    }
    if (boost::multiprecision::abs(max_re) < log_range_limit()) {
        for (std::size_t j = 0; j < terms_.size(); ++j) out.value += mantissas[j] * exp(exponents[j]);
        out.log_form = {boost::multiprecision::log(abs(out.value)), arg(out.value)};
        return out;
    }
    // Factor out exp(max_re) and keep only the log form.
    out.overflow = true;
    Complex scaled;
    for (std::size_t j = 0; j < terms_.size(); ++j) {
        Complex e = exponents[j];
        e.re -= max_re;
        scaled += mantissas[j] * exp(e);
    }
    out.log_form = {max_re + boost::multiprecision::log(abs(scaled)), arg(scaled)};
    return out;
}

ExpPoly pow(const ExpPoly& base, unsigned n) {
    ExpPoly result(ExactComplex(1));
    for (unsigned k = 0; k < n; ++k) result = result * base;
    return result;
}

std::string to_string(const ExpPoly& g) {
    if (g.is_zero()) return "0";
    std::string out;
    for (const auto& t : g.terms()) {
        if (!out.empty()) out += " + ";
        std::string p = "(" + to_string(t.mantissa) + ")";
        if (t.exponent.is_zero()) {
            out += p;
        } else {
            out += p + "*exp(" + to_string(t.exponent) + ")";
        }
    }
    return out;
}

Evaluation eval(const ExpPoly& g, std::complex<double> z, unsigned precision_bits) {
    PrecisionScope scope(precision_bits);
    return g.eval(Complex(z));
}

// ----------------------------------------------------------------------------
//   Normalized form
// ----------------------------------------------------------------------------

std::map<ExactComplex, ExpPoly> group_by_power(const ExpPoly& g, unsigned power) {
    std::map<ExactComplex, std::vector<ExpPolyTerm>> buckets;
    for (const auto& t : g.terms()) {
        ExactComplex q = t.exponent.coefficient(power);
        Poly residual = t.exponent - Poly::monomial(q, power);
        buckets[q].push_back({t.mantissa, residual});
    }
    std::map<ExactComplex, ExpPoly> out;
    for (auto& [q, terms] : buckets) {
        ExpPoly group(std::move(terms));
        if (!group.is_zero()) out.emplace(q, std::move(group));
    }
    return out;
}

NormalizedExpPoly normalize(const ExpPoly& g) {
    if (g.is_zero()) throw std::invalid_argument("cannot normalize the zero exponential polynomial");
    NormalizedExpPoly out;
    out.s = g.exponent_degree();
    out.groups = group_by_power(g, out.s);
    return out;
}

ExpPoly NormalizedExpPoly::reassemble() const {
    ExpPoly out;
    for (const auto& [q, group] : groups) out += group.times_exp(Poly::monomial(q, s));
    return out;
}

}  // namespace crg
