// Exact convex hulls of frequency sets, critical rays, sector systems,
// parabolic strips and the z -> z^m sector lifting.
//
// Angles are radians normalized to [0, 2pi).  Hull geometry is exact; the
// radian value of a critical ray is derived from its exact normal vector.
#pragma once

#include <complex>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "crg/exact.hpp"

namespace crg {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr double kPi = 3.141592653589793238462643383279;

/// Maps any angle into [0, 2pi).
double normalize_angle(double theta);
/// Distance between two angles on the circle, in [0, pi].
double angular_distance(double a, double b);

/// Raised by sector_system for hulls with fewer than two vertices; the
/// caller divides out the common exponential instead of splitting sectors.
class DegenerateHull : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct FrequencyHull {
    std::vector<ExactComplex> points;
    /// Counterclockwise, starting at the lexicographically smallest point.
    std::vector<ExactComplex> vertices;
    /// Side j runs from vertices[sides[j].first] to vertices[sides[j].second].
    std::vector<std::pair<std::size_t, std::size_t>> sides;
    /// Unnormalized outward normal of each side (exact).
    std::vector<ExactComplex> critical_normals;

    bool is_vertex(const ExactComplex& p) const;
    /// Sides whose relative interior contains p (two for a point inside a
    /// degenerate segment hull).
    std::vector<std::size_t> sides_containing(const ExactComplex& p) const;
    /// Radian direction of side j's outer normal.
    double critical_angle(std::size_t side) const;
};

/// Throws std::invalid_argument for an empty input; duplicates are merged.
FrequencyHull convex_hull(std::vector<ExactComplex> points);

/// One angle per side, sorted ascending; empty for point hulls.
std::vector<double> critical_rays(const FrequencyHull& hull);

struct Sector {
    double lo = 0;  // in [0, 2pi)
    double hi = 0;  // lo < hi <= lo + 2pi
    bool closed = true;

    static Sector from_bounds(double lo, double hi, bool closed = true);
    static Sector full_circle() { return {0.0, kTwoPi, true}; }

    double width() const { return hi - lo; }
    bool contains(double theta) const;
    /// Midpoint angle, normalized.
    double center() const { return normalize_angle(0.5 * (lo + hi)); }

    friend bool operator==(const Sector&, const Sector&) = default;
};

/// Intersection of two sectors as a list of disjoint sectors (possibly
/// empty, at most two pieces).
std::vector<Sector> intersect(const Sector& a, const Sector& b);
/// Intersections of every pair, merged into disjoint sectors.
std::vector<Sector> intersect(const std::vector<Sector>& a, const std::vector<Sector>& b);
/// Union of sectors as disjoint pieces sorted by lo.
std::vector<Sector> merge(std::vector<Sector> sectors);
/// Total angular measure of the union.
double measure(const std::vector<Sector>& sectors);

struct DominanceSector {
    ExactComplex vertex;  // conjugated leading coefficient
    Sector sector;        // S_j(eps)
};

struct CriticalStrip {
    std::size_t side;
    double angle;  // eta_j
    ExactComplex normal;
    Sector sector;  // T_j(eps), open
};

struct SectorSystem {
    double epsilon = 0;
    std::vector<DominanceSector> dominance_sectors;
    std::vector<CriticalStrip> critical_strips;
};

/// Default epsilon: min(0.1, gap / 4) over consecutive critical rays.
double default_epsilon(const FrequencyHull& hull);

/// Throws DegenerateHull for <= 1 vertex and std::invalid_argument when
/// epsilon is not in (0, gap/2).
SectorSystem sector_system(const FrequencyHull& hull, double epsilon);

/// Re((omega - lambda) z) - |z| |omega - lambda| |sin eps|.  Throws
/// std::invalid_argument when lambda == omega.
double dominance_margin(const ExactComplex& lambda, const ExactComplex& omega, std::complex<double> z,
                        double epsilon);

/// The m preimages of `sector` under z -> z^m.
std::vector<Sector> lift_sectors(const Sector& sector, unsigned m);

struct ParabolicStrip {
    double axis = 0;
    double aperture = 0.5;  // alpha in [0, 1)

    ParabolicStrip() = default;
    /// Throws std::invalid_argument unless 0 <= aperture < 1.
    ParabolicStrip(double axis, double aperture);
};

/// |Im(z e^{-i axis})| < |z|^alpha
bool strip_contains(const ParabolicStrip& strip, std::complex<double> z);

/// Axes of the m strips whose union covers the z -> z^m preimage of a strip
/// along `axis`: (axis + 2 pi k) / m.
std::vector<ParabolicStrip> lift_strip(const ParabolicStrip& strip, unsigned m);

}  // namespace crg
