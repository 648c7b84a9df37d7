#include "crg/exact.hpp"

#include <stdexcept>

namespace crg {

Rational parse_rational(const std::string& text) {
    auto slash = text.find('/');
    try {
        if (slash == std::string::npos) {
            return Rational(BigInt(text));
        }
        BigInt num(text.substr(0, slash));
        BigInt den(text.substr(slash + 1));
        if (den == 0) {
            throw std::invalid_argument("zero denominator in '" + text + "'");
        }
        return Rational(num, den);
    } catch (const std::runtime_error&) {
        throw std::invalid_argument("malformed rational '" + text + "'");
    }
}

std::string to_string(const Rational& value) {
    auto num = boost::multiprecision::numerator(value);
    auto den = boost::multiprecision::denominator(value);
    if (den == 1) {
        return num.str();
    }
    return num.str() + "/" + den.str();
}

double to_double(const Rational& value) { return value.convert_to<double>(); }

ExactComplex& ExactComplex::operator+=(const ExactComplex& o) {
    re += o.re;
    im += o.im;
    return *this;
}

ExactComplex& ExactComplex::operator-=(const ExactComplex& o) {
    re -= o.re;
    im -= o.im;
    return *this;
}

ExactComplex& ExactComplex::operator*=(const ExactComplex& o) {
    Rational r = re * o.re - im * o.im;
    Rational i = re * o.im + im * o.re;
    re = std::move(r);
    im = std::move(i);
    return *this;
}

ExactComplex& ExactComplex::operator/=(const ExactComplex& o) {
    Rational n = o.norm();
    if (n == 0) {
        throw std::domain_error("ExactComplex division by zero");
    }
    Rational r = (re * o.re + im * o.im) / n;
    Rational i = (im * o.re - re * o.im) / n;
    re = std::move(r);
    im = std::move(i);
    return *this;
}

std::strong_ordering operator<=>(const ExactComplex& a, const ExactComplex& b) {
    if (a.re < b.re) return std::strong_ordering::less;
    if (a.re > b.re) return std::strong_ordering::greater;
    if (a.im < b.im) return std::strong_ordering::less;
    if (a.im > b.im) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

ExactComplex pow(const ExactComplex& base, unsigned n) {
    ExactComplex result(1);
    ExactComplex b = base;
    while (n > 0) {
        if (n & 1U) result *= b;
        b *= b;
        n >>= 1U;
    }
    return result;
}

namespace {

std::string imag_literal(const Rational& im) {
    if (im == 1) return "i";
    return to_string(im) + "i";
}

}  // namespace

std::string to_string(const ExactComplex& value) {
    if (value.im == 0) {
        return to_string(value.re);
    }
    if (value.re == 0) {
        if (value.im == -1) return "-i";
        return imag_literal(value.im);
    }
    std::string out = "(" + to_string(value.re);
    if (value.im < 0) {
        out += "-" + imag_literal(-value.im);
    } else {
        out += "+" + imag_literal(value.im);
    }
    return out + ")";
}

Rational cross(const ExactComplex& a, const ExactComplex& b) { return a.re * b.im - a.im * b.re; }

Rational dot(const ExactComplex& a, const ExactComplex& b) { return a.re * b.re + a.im * b.im; }

}  // namespace crg
