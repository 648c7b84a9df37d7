#include "crg/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace crg {

namespace {

constexpr double kAngleSlack = 1e-12;

}  // namespace

double normalize_angle(double theta) {
    double t = std::fmod(theta, kTwoPi);
    if (t < 0) t += kTwoPi;
    if (t >= kTwoPi) t -= kTwoPi;
    return t;
}

double angular_distance(double a, double b) {
    double d = normalize_angle(a - b);
    return std::min(d, kTwoPi - d);
}

// ----------------------------------------------------------------------------
//   Hull
// ----------------------------------------------------------------------------

bool FrequencyHull::is_vertex(const ExactComplex& p) const {
    return std::find(vertices.begin(), vertices.end(), p) != vertices.end();
}

std::vector<std::size_t> FrequencyHull::sides_containing(const ExactComplex& p) const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < sides.size(); ++j) {
        const auto& a = vertices[sides[j].first];
        const auto& b = vertices[sides[j].second];
        ExactComplex d = b - a;
        ExactComplex v = p - a;
        if (cross(d, v) != 0) continue;
        Rational t = dot(d, v);
        if (t > 0 && t < d.norm()) out.push_back(j);
    }
    return out;
}

double FrequencyHull::critical_angle(std::size_t side) const {
    const auto& n = critical_normals.at(side);
    return normalize_angle(std::atan2(to_double(n.im), to_double(n.re)));
}

FrequencyHull convex_hull(std::vector<ExactComplex> points) {
    if (points.empty()) throw std::invalid_argument("convex hull of an empty point set");
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());

    FrequencyHull hull;
    hull.points = points;
    if (points.size() == 1) {
        hull.vertices = points;
        return hull;
    }
    // Andrew's monotone chain; collinear points are dropped (strict turns).
    std::vector<ExactComplex> chain;
    auto turn = [](const ExactComplex& o, const ExactComplex& a, const ExactComplex& b) { return cross(a - o, b - o); };
    for (const auto& p : points) {
        while (chain.size() >= 2 && turn(chain[chain.size() - 2], chain.back(), p) <= 0) chain.pop_back();
        chain.push_back(p);
    }
    const std::size_t lower = chain.size() + 1;
    for (std::size_t k = points.size() - 1; k-- > 0;) {
        const auto& p = points[k];
        while (chain.size() >= lower && turn(chain[chain.size() - 2], chain.back(), p) <= 0) chain.pop_back();
        chain.push_back(p);
    }
    chain.pop_back();
    hull.vertices = chain;

    const std::size_t n = hull.vertices.size();
    for (std::size_t j = 0; j < n; ++j) {
        std::size_t next = (j + 1) % n;
        hull.sides.emplace_back(j, next);
        ExactComplex d = hull.vertices[next] - hull.vertices[j];
        hull.critical_normals.emplace_back(d.im, -d.re);
    }
    return hull;
}

std::vector<double> critical_rays(const FrequencyHull& hull) {
    std::vector<double> out;
    out.reserve(hull.sides.size());
    for (std::size_t j = 0; j < hull.sides.size(); ++j) out.push_back(hull.critical_angle(j));
    std::sort(out.begin(), out.end());
    return out;
}

// ----------------------------------------------------------------------------
//   Sectors
// ----------------------------------------------------------------------------

Sector Sector::from_bounds(double lo, double hi, bool closed) {
    double width = hi - lo;
    if (!(width > 0)) throw std::invalid_argument("sector width must be positive");
    if (width > kTwoPi + kAngleSlack) throw std::invalid_argument("sector wider than the full circle");
    width = std::min(width, kTwoPi);
    double l = normalize_angle(lo);
    return {l, l + width, closed};
}

bool Sector::contains(double theta) const {
    if (width() >= kTwoPi - kAngleSlack) return true;
    double d = normalize_angle(theta - lo);
    if (closed) {
        return d <= width() + kAngleSlack || d >= kTwoPi - kAngleSlack;
    }
    return d > kAngleSlack && d < width() - kAngleSlack;
}

namespace {

struct Interval {
    double lo;
    double hi;
};

std::vector<Interval> unwrap(const Sector& s) {
    if (s.hi <= kTwoPi) return {{s.lo, s.hi}};
    return {{s.lo, kTwoPi}, {0.0, s.hi - kTwoPi}};
}

}  // namespace

std::vector<Sector> merge(std::vector<Sector> sectors) {
    std::vector<Interval> pieces;
    for (const auto& s : sectors) {
        if (s.width() >= kTwoPi - kAngleSlack) return {Sector::full_circle()};
        for (auto iv : unwrap(s)) pieces.push_back(iv);
    }
    std::sort(pieces.begin(), pieces.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    std::vector<Interval> merged;
    for (const auto& iv : pieces) {
        if (iv.hi - iv.lo <= kAngleSlack) continue;
        if (!merged.empty() && iv.lo <= merged.back().hi + kAngleSlack) {
            merged.back().hi = std::max(merged.back().hi, iv.hi);
        } else {
            merged.push_back(iv);
        }
    }
    if (merged.size() == 1 && merged[0].lo <= kAngleSlack && merged[0].hi >= kTwoPi - kAngleSlack) {
        return {Sector::full_circle()};
    }
    if (merged.size() >= 2 && merged.front().lo <= kAngleSlack && merged.back().hi >= kTwoPi - kAngleSlack) {
        merged.back().hi = kTwoPi + merged.front().hi;
        merged.erase(merged.begin());
    }
    std::vector<Sector> out;
    out.reserve(merged.size());
    for (const auto& iv : merged) out.push_back({iv.lo, iv.hi, true});
    std::sort(out.begin(), out.end(), [](const Sector& a, const Sector& b) { return a.lo < b.lo; });
    return out;
}

std::vector<Sector> intersect(const Sector& a, const Sector& b) {
    if (a.width() >= kTwoPi - kAngleSlack) return {b};
    if (b.width() >= kTwoPi - kAngleSlack) return {a};
    std::vector<Sector> out;
    for (double shift : {-kTwoPi, 0.0, kTwoPi}) {
        double lo = std::max(a.lo, b.lo + shift);
        double hi = std::min(a.hi, b.hi + shift);
        if (hi - lo > kAngleSlack) out.push_back(Sector::from_bounds(lo, hi, a.closed && b.closed));
    }
    return merge(out);
}

std::vector<Sector> intersect(const std::vector<Sector>& a, const std::vector<Sector>& b) {
    std::vector<Sector> out;
    for (const auto& x : a) {
        for (const auto& y : b) {
            auto part = intersect(x, y);
            out.insert(out.end(), part.begin(), part.end());
        }
    }
    return merge(out);
}

double measure(const std::vector<Sector>& sectors) {
    double total = 0;
    for (const auto& s : merge(sectors)) total += s.width();
    return total;
}

double default_epsilon(const FrequencyHull& hull) {
    auto rays = critical_rays(hull);
    if (rays.size() < 2) return 0.1;
    double gap = kTwoPi;
    for (std::size_t j = 0; j < rays.size(); ++j) {
        double next = j + 1 < rays.size() ? rays[j + 1] : rays[0] + kTwoPi;
        gap = std::min(gap, next - rays[j]);
    }
    return std::min(0.1, gap / 4);
}

SectorSystem sector_system(const FrequencyHull& hull, double epsilon) {
    if (hull.vertices.size() <= 1) {
        throw DegenerateHull("hull has a single vertex; divide out the common exponential factor");
    }
    const std::size_t n = hull.sides.size();
    std::vector<double> angles(n);
    for (std::size_t j = 0; j < n; ++j) angles[j] = hull.critical_angle(j);

    double gap = kTwoPi;
    auto sorted = angles;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t j = 0; j < n; ++j) {
        double next = j + 1 < n ? sorted[j + 1] : sorted[0] + kTwoPi;
        gap = std::min(gap, next - sorted[j]);
    }
    if (!(epsilon > 0) || !(epsilon < gap / 2)) {
        throw std::invalid_argument("epsilon must lie in (0, " + std::to_string(gap / 2) + ")");
    }

    SectorSystem sys;
    sys.epsilon = epsilon;
    // Vertex k sits between side k-1 (ending at it) and side k (leaving it).
    for (std::size_t k = 0; k < hull.vertices.size(); ++k) {
        double from = angles[(k + n - 1) % n];
        double to = angles[k];
        double width = normalize_angle(to - from);
        if (width <= 0) width = kTwoPi;
        sys.dominance_sectors.push_back(
            {hull.vertices[k], Sector::from_bounds(from + epsilon, from + width - epsilon, true)});
    }
    for (std::size_t j = 0; j < n; ++j) {
        sys.critical_strips.push_back(
            {j, angles[j], hull.critical_normals[j], Sector::from_bounds(angles[j] - epsilon, angles[j] + epsilon, false)});
    }
    return sys;
}

double dominance_margin(const ExactComplex& lambda, const ExactComplex& omega, std::complex<double> z,
                        double epsilon) {
    if (lambda == omega) throw std::invalid_argument("dominance margin needs distinct frequencies");
    std::complex<double> diff = (omega - lambda).to_complex();
    return (diff * z).real() - std::abs(z) * std::abs(diff) * std::abs(std::sin(epsilon));
}

std::vector<Sector> lift_sectors(const Sector& sector, unsigned m) {
    if (m == 0) throw std::invalid_argument("lift divisor must be positive");
    std::vector<Sector> out;
    out.reserve(m);
    const double width = sector.width() / m;
    for (unsigned i = 0; i < m; ++i) {
        double lo = (sector.lo + kTwoPi * i) / m;
        Sector s = Sector::from_bounds(lo, lo + width, sector.closed);
        out.push_back(s);
    }
    return out;
}

ParabolicStrip::ParabolicStrip(double axis_angle, double alpha) : axis(normalize_angle(axis_angle)), aperture(alpha) {
    if (!(alpha >= 0 && alpha < 1)) throw std::invalid_argument("parabolic strip aperture must lie in [0, 1)");
}

bool strip_contains(const ParabolicStrip& strip, std::complex<double> z) {
    std::complex<double> rotated = z * std::polar(1.0, -strip.axis);
    return std::abs(rotated.imag()) < std::pow(std::abs(z), strip.aperture);
}

std::vector<ParabolicStrip> lift_strip(const ParabolicStrip& strip, unsigned m) {
    std::vector<ParabolicStrip> out;
    for (unsigned k = 0; k < m; ++k) out.emplace_back((strip.axis + kTwoPi * k) / m, strip.aperture);
    return out;
}

}  // namespace crg
