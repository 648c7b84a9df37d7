// Exact Gaussian-rational scalars.
//
// Every symbolic quantity in the library (polynomial coefficients, exponent
// coefficients, hull points) is an ExactComplex.  Floats only appear once a
// value is evaluated or handed to the asymptotic layer.
#pragma once

#include <complex>
#include <compare>
#include <cstdint>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace crg {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

/// Parses "p" or "p/q" into a Rational.  Throws std::invalid_argument.
Rational parse_rational(const std::string& text);

/// Canonical decimal-free spelling: "p" or "p/q".
std::string to_string(const Rational& value);

double to_double(const Rational& value);

struct ExactComplex {
    Rational re;
    Rational im;

    ExactComplex() = default;
    ExactComplex(Rational real) : re(std::move(real)) {}
    ExactComplex(Rational real, Rational imag) : re(std::move(real)), im(std::move(imag)) {}
    ExactComplex(int real) : re(real) {}
    ExactComplex(int real, int imag) : re(real), im(imag) {}

    static ExactComplex i() { return {0, 1}; }

    bool is_zero() const { return re == 0 && im == 0; }
    bool is_real() const { return im == 0; }

    ExactComplex conj() const { return {re, -im}; }
    /// |z|^2, exact.
    Rational norm() const { return re * re + im * im; }

    ExactComplex operator-() const { return {-re, -im}; }
    ExactComplex& operator+=(const ExactComplex& o);
    ExactComplex& operator-=(const ExactComplex& o);
    ExactComplex& operator*=(const ExactComplex& o);
    /// Throws std::domain_error on division by zero.
    ExactComplex& operator/=(const ExactComplex& o);

    friend ExactComplex operator+(ExactComplex a, const ExactComplex& b) { return a += b; }
    friend ExactComplex operator-(ExactComplex a, const ExactComplex& b) { return a -= b; }
    friend ExactComplex operator*(ExactComplex a, const ExactComplex& b) { return a *= b; }
    friend ExactComplex operator/(ExactComplex a, const ExactComplex& b) { return a /= b; }

    friend bool operator==(const ExactComplex& a, const ExactComplex& b) {
        return a.re == b.re && a.im == b.im;
    }
    /// Lexicographic: real part first, then imaginary part.
    friend std::strong_ordering operator<=>(const ExactComplex& a, const ExactComplex& b);

    std::complex<double> to_complex() const { return {to_double(re), to_double(im)}; }
};

/// Integer power, n >= 0.
ExactComplex pow(const ExactComplex& base, unsigned n);

/// Spelling accepted back by the expression parser, e.g. "3", "-1/2", "2i",
/// "(1/3-2i)".  Compound values are parenthesised.
std::string to_string(const ExactComplex& value);

/// Exact 2D cross product Im(conj(a) * b) = a.re*b.im - a.im*b.re.
Rational cross(const ExactComplex& a, const ExactComplex& b);
/// Exact 2D dot product Re(conj(a) * b).
Rational dot(const ExactComplex& a, const ExactComplex& b);

}  // namespace crg
