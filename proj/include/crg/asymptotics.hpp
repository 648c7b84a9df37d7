// Newton polygons of polynomial-coefficient equations, Puiseux growth
// exponents, Stokes rays and indicator-function candidates.
#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "crg/bignum.hpp"
#include "crg/decomposition.hpp"
#include "crg/exact.hpp"
#include "crg/geometry.hpp"

namespace crg {

struct NewtonPoint {
    unsigned k;  // derivative order
    unsigned d;  // degree of its coefficient
};

struct NewtonSegment {
    unsigned k_left;
    unsigned k_right;
    Rational slope;  // (d_right - d_left) / (k_right - k_left)

    Rational lambda() const { return -slope; }
    /// Growth exponent: f ~ exp(c/mu z^mu).
    Rational mu() const { return lambda() + 1; }
    bool admissible() const { return mu() > 0; }
    unsigned length() const { return k_right - k_left; }
};

struct NewtonPolygon {
    std::vector<NewtonPoint> points;
    /// Upper hull from k_min to n, slopes strictly decreasing.
    std::vector<NewtonSegment> segments;
    unsigned order = 0;
    unsigned k_min = 0;

    std::vector<NewtonSegment> admissible_segments() const;
    /// Sum of admissible and non-admissible segment lengths plus k_min.
    unsigned root_count() const;
};

/// Throws std::invalid_argument for an empty coefficient list or a zero
/// leading coefficient.
NewtonPolygon newton_polygon(const std::vector<Poly>& coefficients);
NewtonPolygon newton_polygon(const FundamentalDE& de);

struct CharacteristicRoot {
    Complex value;  // at the precision requested
    std::optional<ExactComplex> exact;
    unsigned multiplicity = 1;
    /// Set when numerically distinct roots were merged by the cluster rule.
    bool multiplicity_uncertain = false;

    std::complex<double> approx() const { return value.to_double(); }
};

inline constexpr unsigned kDefaultRootPrecision = 128;
inline constexpr unsigned kDefaultRefineDepth = 12;

/// Nonzero roots of sum_{k on segment} b_k c^(k - k_left), b_k the leading
/// coefficient of the k-th polynomial.  Multiplicities come from an exact
/// square-free factorization; Gaussian-rational roots are reported exactly.
std::vector<CharacteristicRoot> characteristic_roots(const std::vector<Poly>& coefficients,
                                                     const NewtonSegment& segment,
                                                     unsigned precision_bits = kDefaultRootPrecision);
std::vector<CharacteristicRoot> characteristic_roots(const FundamentalDE& de, const NewtonSegment& segment,
                                                     unsigned precision_bits = kDefaultRootPrecision);

/// Roots of a polynomial with numeric coefficients (index = power), with
/// multiplicities from clustering at `cluster_radius`.
std::vector<CharacteristicRoot> numeric_roots(const std::vector<Complex>& coefficients, const Real& cluster_radius);

struct PuiseuxTerm {
    Rational mu;
    Complex a;
    std::optional<ExactComplex> exact;

    std::complex<double> approx() const { return a.to_double(); }
};

struct ExponentBranch {
    /// Descending mu; the exponent is Q(z) = sum a z^mu.
    std::vector<PuiseuxTerm> puiseux;
    unsigned p = 1;
    unsigned multiplicity = 1;
    /// Multiplicity > 1 at the final refinement step: log-polynomial factors
    /// are present but not expanded.
    bool log_correction = false;
    bool multiplicity_uncertain = false;

    const PuiseuxTerm& leading() const { return puiseux.front(); }
    /// |a| cos(mu theta + arg a) for the leading term, theta in [0, 2pi).
    double indicator(double theta) const;
    /// Re Q(r e^{i theta}) with the principal branch.
    double growth(double r, double theta) const;
};

std::string to_string(const ExponentBranch& branch);

/// Branches for every admissible segment and characteristic root, refined
/// by substituting f = exp(Q) g until the next exponent is <= 0, the
/// equation is solved exactly, or `refine_depth` extra terms were added.
std::vector<ExponentBranch> exponents(const FundamentalDE& de, unsigned refine_depth = kDefaultRefineDepth,
                                      unsigned precision_bits = kDefaultRootPrecision);

/// Degree drop of the dominant balance when f'/f = Q'(z) is substituted
/// through the exact log-derivative chain; infinite (nullopt) when the
/// residual vanishes identically.
std::optional<Rational> residual_degree_drop(const FundamentalDE& de, const ExponentBranch& branch);

struct StokesRay {
    double angle;
    std::size_t first;
    std::size_t second;
    std::size_t level;  // index of the separating Puiseux term in `first`
    Rational mu;
};

/// Angles in `sector` where two branches exchange dominance:
/// cos(mu* theta + arg da) = 0 for the highest differing term (mu*, da).
/// Fewer than two branches give an empty set.
std::vector<StokesRay> stokes_rays(const std::vector<ExponentBranch>& branches, const Sector& sector);

struct LeafAnalysis {
    FundamentalDE leaf;
    NewtonPolygon polygon;
    std::vector<ExponentBranch> branches;
    std::vector<StokesRay> stokes;
};

LeafAnalysis analyze_leaf(const FundamentalDE& leaf, unsigned refine_depth = kDefaultRefineDepth,
                          unsigned precision_bits = kDefaultRootPrecision);

struct IndicatorCandidate {
    Rational rho;
    std::complex<double> a;
    std::size_t leaf;
    std::size_t branch;

    /// |a| cos(rho theta + arg a)
    double h(double theta) const;
    std::string id() const;
};

struct IndicatorPiece {
    Sector sector;
    std::size_t leaf;
    std::vector<IndicatorCandidate> candidates;
};

/// Leaf validity sectors split at their Stokes rays, each with the leading
/// terms of every branch of that leaf.
std::vector<IndicatorPiece> indicator_candidates(const std::vector<LeafAnalysis>& leaves);

}  // namespace crg
