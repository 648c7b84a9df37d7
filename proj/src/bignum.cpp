#include "crg/bignum.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/math/constants/constants.hpp>

namespace crg {

namespace {

unsigned digits10_for_bits(unsigned bits) {
    // mpfr_float takes decimal digits; round so the binary precision is at
    // least the requested bit count.
    return static_cast<unsigned>(std::ceil(bits * 0.30102999566398120)) + 1;
}

}  // namespace

PrecisionScope::PrecisionScope(unsigned bits) : saved_digits10_(Real::default_precision()) {
    if (bits < 53) {
        throw std::invalid_argument("precision must be at least 53 bits");
    }
    Real::default_precision(digits10_for_bits(bits));
}

PrecisionScope::~PrecisionScope() { Real::default_precision(saved_digits10_); }

unsigned PrecisionScope::current_bits() {
    return static_cast<unsigned>(std::floor(Real::default_precision() / 0.30102999566398120));
}

Real real_from(const Rational& value) {
    Real num(boost::multiprecision::numerator(value).str());
    Real den(boost::multiprecision::denominator(value).str());
    return num / den;
}

Real pi() { return boost::math::constants::pi<Real>(); }

Complex Complex::polar(const Real& modulus, const Real& angle) {
    return {modulus * boost::multiprecision::cos(angle), modulus * boost::multiprecision::sin(angle)};
}

Complex& Complex::operator*=(const Complex& o) {
    Real r = re * o.re - im * o.im;
    im = re * o.im + im * o.re;
    re = std::move(r);
    return *this;
}

Complex& Complex::operator/=(const Complex& o) {
    // Smith's algorithm keeps intermediates in range.
    using boost::multiprecision::abs;
    if (o.is_zero()) {
        throw std::domain_error("Complex division by zero");
    }
    if (abs(o.re) >= abs(o.im)) {
        Real ratio = o.im / o.re;
        Real den = o.re + o.im * ratio;
        Real r = (re + im * ratio) / den;
        im = (im - re * ratio) / den;
        re = std::move(r);
    } else {
        Real ratio = o.re / o.im;
        Real den = o.re * ratio + o.im;
        Real r = (re * ratio + im) / den;
        im = (im * ratio - re) / den;
        re = std::move(r);
    }
    return *this;
}

Real abs(const Complex& z) { return boost::multiprecision::hypot(z.re, z.im); }

Real arg(const Complex& z) { return boost::multiprecision::atan2(z.im, z.re); }

Complex exp(const Complex& z) { return Complex::polar(boost::multiprecision::exp(z.re), z.im); }

Complex log(const Complex& z) { return {boost::multiprecision::log(abs(z)), arg(z)}; }

Complex sqrt(const Complex& z) {
    Real modulus = boost::multiprecision::sqrt(abs(z));
    return Complex::polar(modulus, arg(z) / 2);
}

Complex pow(const Complex& z, unsigned n) {
    Complex result(1);
    Complex b = z;
    while (n > 0) {
        if (n & 1U) result *= b;
        b *= b;
        n >>= 1U;
    }
    return result;
}

Real max_abs_component(const Complex& z) {
    using boost::multiprecision::abs;
    Real a = abs(z.re);
    Real b = abs(z.im);
    return a > b ? a : b;
}

}  // namespace crg
