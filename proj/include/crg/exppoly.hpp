// Exponential polynomials  sum_j P_j(z) exp(Q_j(z))  with Gaussian-rational
// coefficients, their ring operations, evaluation and normalized form.
#pragma once

#include <complex>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crg/bignum.hpp"
#include "crg/exact.hpp"

namespace crg {

/// Dense univariate polynomial in z.  Coefficients are indexed by power and
/// trailing zeros are always trimmed, so the zero polynomial has no
/// coefficients.
class Poly {
public:
    Poly() = default;
    Poly(ExactComplex constant);
    explicit Poly(std::vector<ExactComplex> coefficients);

    static Poly z();
    /// c * z^power
    static Poly monomial(ExactComplex c, unsigned power);

    const std::vector<ExactComplex>& coefficients() const { return coeffs_; }
    bool is_zero() const { return coeffs_.empty(); }
    bool is_constant() const { return coeffs_.size() <= 1; }
    /// 0 for constants including the zero polynomial.
    unsigned degree() const { return coeffs_.empty() ? 0 : static_cast<unsigned>(coeffs_.size() - 1); }
    /// Coefficient of z^power (zero beyond the degree).
    ExactComplex coefficient(unsigned power) const;
    ExactComplex leading() const { return coeffs_.empty() ? ExactComplex() : coeffs_.back(); }

    Poly derivative() const;
    /// Drops every power >= power.
    Poly truncated_below(unsigned power) const;

    Poly operator-() const;
    Poly& operator+=(const Poly& o);
    Poly& operator-=(const Poly& o);
    friend Poly operator+(Poly a, const Poly& b) { return a += b; }
    friend Poly operator-(Poly a, const Poly& b) { return a -= b; }
    friend Poly operator*(const Poly& a, const Poly& b);
    friend bool operator==(const Poly& a, const Poly& b) { return a.coeffs_ == b.coeffs_; }

    std::complex<double> eval(std::complex<double> z) const;
    Complex eval(const Complex& z) const;

    /// Coefficients of P(center + h) as a polynomial in h.
    std::vector<Complex> shifted(const Complex& center) const;

private:
    void trim();
    std::vector<ExactComplex> coeffs_;
};

Poly pow(const Poly& base, unsigned n);
std::string to_string(const Poly& p);

/// Canonical comparison key order for exponent polynomials: degree first,
/// then coefficients from the highest power down, real part before imaginary.
bool exponent_less(const Poly& a, const Poly& b);

struct ExpPolyTerm {
    Poly mantissa;  // P
    Poly exponent;  // Q

    friend bool operator==(const ExpPolyTerm&, const ExpPolyTerm&) = default;
};

/// log|g| and arg g, used when |g| leaves the representable range.
struct LogPolar {
    Real log_abs;
    Real phase;
};

struct Evaluation {
    Complex value;
    LogPolar log_form;
    /// Set when Re Q(z) of some term exceeds the exponent range; only
    /// log_form is meaningful then.
    bool overflow = false;
};

class ExpPoly {
public:
    ExpPoly() = default;
    ExpPoly(ExactComplex constant);
    ExpPoly(Poly polynomial);
    /// Terms are merged and sorted into canonical form.
    explicit ExpPoly(std::vector<ExpPolyTerm> terms);

    static ExpPoly exp_of(const Poly& exponent);

    const std::vector<ExpPolyTerm>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    /// True when every exponent is the zero polynomial.
    bool is_polynomial() const;
    /// The polynomial itself; throws std::logic_error unless is_polynomial().
    Poly as_polynomial() const;
    /// max deg Q_j over terms (0 for polynomials and for constant exponents).
    unsigned exponent_degree() const;

    ExpPoly operator-() const;
    ExpPoly& operator+=(const ExpPoly& o);
    ExpPoly& operator-=(const ExpPoly& o);
    friend ExpPoly operator+(ExpPoly a, const ExpPoly& b) { return a += b; }
    friend ExpPoly operator-(ExpPoly a, const ExpPoly& b) { return a -= b; }
    friend ExpPoly operator*(const ExpPoly& a, const ExpPoly& b);
    friend bool operator==(const ExpPoly& a, const ExpPoly& b) { return a.terms_ == b.terms_; }

    /// (P e^Q)' = (P' + P Q') e^Q, termwise.
    ExpPoly derivative() const;
    /// Multiplies every term by exp(shift).
    ExpPoly times_exp(const Poly& shift) const;

    std::complex<double> eval(std::complex<double> z) const;
    /// Evaluation at the calling thread's current precision.
    Evaluation eval(const Complex& z) const;

private:
    void canonicalize();
    std::vector<ExpPolyTerm> terms_;
};

ExpPoly pow(const ExpPoly& base, unsigned n);

/// Round-trips through parse_exppoly.
std::string to_string(const ExpPoly& g);

/// Evaluates g at z with `precision_bits` of working precision.  Values
/// with |Re Q| beyond the MPFR exponent range come back flagged overflow.
Evaluation eval(const ExpPoly& g, std::complex<double> z, unsigned precision_bits);

/// G = sum_q groups[q] * exp(q z^s) with every group of exponent degree < s.
struct NormalizedExpPoly {
    unsigned s = 0;
    std::map<ExactComplex, ExpPoly> groups;

    ExpPoly reassemble() const;
};

/// Throws std::invalid_argument for the zero exponential polynomial.
NormalizedExpPoly normalize(const ExpPoly& g);

/// Groups g by the coefficient of z^power in each exponent; the residual
/// exponent (Q minus q z^power) stays inside the group.  Zero g gives no
/// groups.
std::map<ExactComplex, ExpPoly> group_by_power(const ExpPoly& g, unsigned power);

}  // namespace crg
