// Multiprecision complex arithmetic on top of MPFR.
//
// Precision is a per-thread setting (bits).  Open a PrecisionScope before
// creating any Real/Complex values that should carry that precision.
#pragma once

#include <complex>
#include <string>

#include <boost/multiprecision/mpfr.hpp>

#include "crg/exact.hpp"

namespace crg {

using Real = boost::multiprecision::mpfr_float;

/// Sets the calling thread's default MPFR precision for its lifetime and
/// restores the previous value on exit.
class PrecisionScope {
public:
    explicit PrecisionScope(unsigned bits);
    ~PrecisionScope();
    PrecisionScope(const PrecisionScope&) = delete;
    PrecisionScope& operator=(const PrecisionScope&) = delete;

    static unsigned current_bits();

private:
    unsigned saved_digits10_;
};

Real real_from(const Rational& value);
Real pi();

struct Complex {
    Real re;
    Real im;

    Complex() : re(0), im(0) {}
    Complex(Real r) : re(std::move(r)), im(0) {}
    Complex(Real r, Real i) : re(std::move(r)), im(std::move(i)) {}
    Complex(int r) : re(r), im(0) {}
    Complex(double r) : re(r), im(0) {}
    explicit Complex(std::complex<double> z) : re(z.real()), im(z.imag()) {}
    explicit Complex(const ExactComplex& z) : re(real_from(z.re)), im(real_from(z.im)) {}

    static Complex polar(const Real& modulus, const Real& angle);

    Complex operator-() const { return {-re, -im}; }
    Complex& operator+=(const Complex& o) {
        re += o.re;
        im += o.im;
        return *this;
    }
    Complex& operator-=(const Complex& o) {
        re -= o.re;
        im -= o.im;
        return *this;
    }
    Complex& operator*=(const Complex& o);
    Complex& operator*=(const Real& s) {
        re *= s;
        im *= s;
        return *this;
    }
    Complex& operator/=(const Complex& o);

    friend Complex operator+(Complex a, const Complex& b) { return a += b; }
    friend Complex operator-(Complex a, const Complex& b) { return a -= b; }
    friend Complex operator*(Complex a, const Complex& b) { return a *= b; }
    friend Complex operator*(Complex a, const Real& s) { return a *= s; }
    friend Complex operator*(const Real& s, Complex a) { return a *= s; }
    friend Complex operator/(Complex a, const Complex& b) { return a /= b; }

    bool is_zero() const { return re == 0 && im == 0; }
    Complex conj() const { return {re, -im}; }
    Real norm() const { return re * re + im * im; }

    std::complex<double> to_double() const {
        return {re.convert_to<double>(), im.convert_to<double>()};
    }
};

Real abs(const Complex& z);
Real arg(const Complex& z);
Complex exp(const Complex& z);
/// Principal branch.
Complex log(const Complex& z);
Complex sqrt(const Complex& z);
Complex pow(const Complex& z, unsigned n);

/// Largest of |re|, |im|; cheap magnitude bound for scaling decisions.
Real max_abs_component(const Complex& z);

}  // namespace crg
