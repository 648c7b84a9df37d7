// Random generators and small oracles shared by the test suites.
#pragma once

#include <complex>
#include <random>
#include <vector>

#include "crg/exppoly.hpp"

namespace crg::testing {

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

    Rational rational(int span = 5, int max_den = 4) {
        return Rational(integer(-span, span), integer(1, max_den));
    }
    ExactComplex gaussian(int span = 5, int max_den = 4) { return {rational(span, max_den), rational(span, max_den)}; }
    /// Real or imaginary or general, to hit the degenerate cases often.
    ExactComplex frequency() {
        switch (integer(0, 3)) {
            case 0: return {rational(), 0};
            case 1: return {0, rational()};
            default: return gaussian();
        }
    }

    Poly poly(unsigned max_degree, bool nonzero = true) {
        for (;;) {
            unsigned deg = static_cast<unsigned>(integer(0, static_cast<int>(max_degree)));
            std::vector<ExactComplex> c(deg + 1);
            for (auto& x : c) x = integer(0, 2) == 0 ? ExactComplex() : gaussian(3, 3);
            Poly p(std::move(c));
            if (!nonzero || !p.is_zero()) return p;
        }
    }

    /// Exponent without constant term (keeps magnitudes tame).
    Poly exponent(unsigned max_degree) {
        Poly q = poly(max_degree, false);
        return q - Poly(q.coefficient(0));
    }

    ExpPoly exppoly(unsigned max_terms = 4, unsigned max_degree = 3) {
        for (;;) {
            std::vector<ExpPolyTerm> terms;
            int count = integer(1, static_cast<int>(max_terms));
            for (int k = 0; k < count; ++k) terms.push_back({poly(max_degree), exponent(max_degree)});
            ExpPoly g(std::move(terms));
            if (!g.is_zero()) return g;
        }
    }

    std::complex<double> point(double radius) {
        double r = radius * std::sqrt(uniform(0, 1));
        return std::polar(r, uniform(0, 6.283185307179586));
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

inline double relative_gap(std::complex<double> a, std::complex<double> b) {
    double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

}  // namespace crg::testing
