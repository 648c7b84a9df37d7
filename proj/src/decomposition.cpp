#include "crg/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "crg/parse.hpp"

namespace crg {

// ----------------------------------------------------------------------------
//   LinearODE
// ----------------------------------------------------------------------------

LinearODE::LinearODE(std::vector<ExpPoly> coefficients) : coeffs_(std::move(coefficients)) {
    while (!coeffs_.empty() && coeffs_.back().is_zero()) coeffs_.pop_back();
    if (coeffs_.empty()) throw std::invalid_argument("linear ODE with all coefficients zero");
}

LinearODE LinearODE::parse(const std::string& text) {
    auto form = parse_linear_form(text);
    unsigned order = form.rbegin()->first;
    std::vector<ExpPoly> coeffs(order + 1);
    for (auto& [k, c] : form) coeffs[k] = std::move(c);
    return LinearODE(std::move(coeffs));
}

bool LinearODE::is_polynomial() const {
    return std::all_of(coeffs_.begin(), coeffs_.end(), [](const ExpPoly& c) { return c.is_polynomial(); });
}

unsigned LinearODE::exponent_degree() const {
    unsigned s = 0;
    for (const auto& c : coeffs_) s = std::max(s, c.exponent_degree());
    return s;
}

LinearODE LinearODE::times_exp(const Poly& shift) const {
    std::vector<ExpPoly> out;
    out.reserve(coeffs_.size());
    for (const auto& c : coeffs_) out.push_back(c.times_exp(shift));
    return LinearODE(std::move(out));
}

std::string to_string(const LinearODE& eq) {
    std::string out;
    for (unsigned m = eq.order() + 1; m-- > 0;) {
        const auto& c = eq.coefficient(m);
        if (c.is_zero()) continue;
        if (!out.empty()) out += " + ";
        std::string unknown = "f";
        if (m > 0 && m <= 4) {
            unknown += std::string(m, '\'');
        } else if (m > 4) {
            unknown += "^(" + std::to_string(m) + ")";
        }
        out += "(" + to_string(c) + ")*" + unknown;
    }
    return out + " = 0";
}

// ----------------------------------------------------------------------------
//   Grouping
// ----------------------------------------------------------------------------

GroupedODE group_at(const LinearODE& eq, unsigned power) {
    std::map<ExactComplex, std::vector<ExpPoly>> buckets;
    const unsigned n = eq.order();
    for (unsigned m = 0; m <= n; ++m) {
        for (auto& [q, part] : group_by_power(eq.coefficient(m), power)) {
            auto& coeffs = buckets[q];
            if (coeffs.empty()) coeffs.resize(n + 1);
            coeffs[m] = std::move(part);
        }
    }
    GroupedODE out;
    out.s = power;
    for (auto& [q, coeffs] : buckets) out.groups.emplace_back(q, LinearODE(std::move(coeffs)));
    return out;
}

GroupedODE group(const LinearODE& eq) {
    if (eq.exponent_degree() == 0) {
        throw AlreadyFundamental("equation has polynomial coefficients only (already fundamental)");
    }
    return group_at(eq, eq.exponent_degree());
}

LinearODE GroupedODE::reassemble() const {
    std::size_t order = 0;
    for (const auto& [q, eq] : groups) order = std::max<std::size_t>(order, eq.order());
    std::vector<ExpPoly> coeffs(order + 1);
    for (const auto& [q, eq] : groups) {
        Poly shift = Poly::monomial(q, s);
        for (unsigned m = 0; m <= eq.order(); ++m) coeffs[m] += eq.coefficient(m).times_exp(shift);
    }
    return LinearODE(std::move(coeffs));
}

std::complex<double> apply(const LinearODE& eq, std::complex<double> z,
                           const std::map<unsigned, std::complex<double>>& derivatives) {
    std::complex<double> acc = 0;
    for (unsigned m = 0; m <= eq.order(); ++m) {
        auto it = derivatives.find(m);
        if (it == derivatives.end()) {
            throw std::invalid_argument("missing derivative of order " + std::to_string(m));
        }
        if (!eq.coefficient(m).is_zero()) acc += eq.coefficient(m).eval(z) * it->second;
    }
    return acc;
}

Complex apply(const LinearODE& eq, const Complex& z, const std::vector<Complex>& derivatives) {
    if (derivatives.size() <= eq.order()) {
        throw std::invalid_argument("missing derivative of order " + std::to_string(derivatives.size()));
    }
    Complex acc;
    for (unsigned m = 0; m <= eq.order(); ++m) {
        if (eq.coefficient(m).is_zero()) continue;
        acc += eq.coefficient(m).eval(z).value * derivatives[m];
    }
    return acc;
}

// ----------------------------------------------------------------------------
//   Tree
// ----------------------------------------------------------------------------

std::string to_string(HullRole role) {
    switch (role) {
        case HullRole::Root: return "root";
        case HullRole::Vertex: return "vertex";
        case HullRole::Edge: return "edge";
        case HullRole::Interior: return "interior";
        case HullRole::Single: return "single";
    }
    return "?";
}

namespace {

void expand(DecompNode& node, unsigned max_level, double epsilon) {
    if (node.equation.is_polynomial()) return;
    if (node.level >= max_level) {
        throw std::logic_error("decomposition deeper than the exponent degree (grouping fault)");
    }
    const unsigned power = max_level - node.level;
    node.power = power;
    GroupedODE grouped = group_at(node.equation, power);

    std::vector<ExactComplex> conj_q;
    for (const auto& [q, eq] : grouped.groups) conj_q.push_back(q.conj());
    node.hull = convex_hull(conj_q);
    if (node.hull->vertices.size() >= 2) node.sectors = sector_system(*node.hull, epsilon);

    for (std::size_t g = 0; g < grouped.groups.size(); ++g) {
        const auto& [q, eq] = grouped.groups[g];
        DecompNode child;
        child.path = node.path;
        child.path.push_back(g);
        child.q_path = node.q_path;
        child.q_path.push_back(q);
        child.level = node.level + 1;
        child.q = q;
        child.equation = eq;

        const ExactComplex w = q.conj();
        if (!node.sectors) {
            child.role = HullRole::Single;
            child.lifted_sectors = {Sector::full_circle()};
        } else if (node.hull->is_vertex(w)) {
            child.role = HullRole::Vertex;
            for (const auto& ds : node.sectors->dominance_sectors) {
                if (ds.vertex == w) child.lifted_sectors = lift_sectors(ds.sector, power);
            }
        } else if (auto sides = node.hull->sides_containing(w); !sides.empty()) {
            // Co-dominant along the side's critical ray; the group leads
            // inside the parabolic strips around it.
            child.role = HullRole::Edge;
            for (const auto& strip : node.sectors->critical_strips) {
                if (std::find(sides.begin(), sides.end(), strip.side) == sides.end()) continue;
                auto lifted_strip_sectors = lift_sectors(strip.sector, power);
                child.lifted_sectors.insert(child.lifted_sectors.end(), lifted_strip_sectors.begin(),
                                            lifted_strip_sectors.end());
                auto lifted = lift_strip(ParabolicStrip(strip.angle, kStripAperture), power);
                child.strips.insert(child.strips.end(), lifted.begin(), lifted.end());
            }
        } else {
            child.role = HullRole::Interior;
        }
        child.region = child.lifted_sectors.empty() ? std::vector<Sector>{}
                                                    : intersect(node.region, child.lifted_sectors);
        if (!node.strips.empty() && child.strips.empty()) child.strips = node.strips;
        expand(child, max_level, epsilon);
        node.children.push_back(std::move(child));
    }
}

}  // namespace

DecompNode build_tree(const LinearODE& eq, double epsilon) {
    if (eq.is_polynomial()) {
        throw AlreadyFundamental("equation has polynomial coefficients only (already fundamental)");
    }
    DecompNode root;
    root.equation = eq;
    root.region = {Sector::full_circle()};
    expand(root, eq.exponent_degree(), epsilon);
    return root;
}

std::vector<ExceptionalRay> exceptional_rays(const DecompNode& root) {
    std::vector<ExceptionalRay> out;
    std::function<void(const DecompNode&)> visit = [&](const DecompNode& node) {
        if (node.sectors) {
            for (const auto& strip : node.sectors->critical_strips) {
                for (unsigned i = 0; i < node.power; ++i) {
                    double angle = normalize_angle((strip.angle + kTwoPi * i) / node.power);
                    bool inside = std::any_of(node.region.begin(), node.region.end(),
                                              [&](const Sector& s) { return s.contains(angle); });
                    if (!inside) continue;
                    bool seen = std::any_of(out.begin(), out.end(), [&](const ExceptionalRay& r) {
                        return angular_distance(r.angle, angle) < 1e-12;
                    });
                    if (!seen) out.push_back({angle, node.level + 1, node.power > 1});
                }
            }
        }
        for (const auto& child : node.children) visit(child);
    };
    visit(root);
    std::sort(out.begin(), out.end(), [](const ExceptionalRay& a, const ExceptionalRay& b) { return a.angle < b.angle; });
    return out;
}

FundamentalDE FundamentalDE::from_equation(const LinearODE& eq) {
    // A shared constant exponent e^c is a harmless overall factor.
    std::optional<Poly> shared;
    bool uniform = true;
    for (const auto& c : eq.coefficients()) {
        for (const auto& t : c.terms()) {
            if (!t.exponent.is_constant()) throw std::invalid_argument("fundamental equation with exponential coefficients");
            if (!shared) shared = t.exponent;
            uniform = uniform && t.exponent == *shared;
        }
    }
    if (!uniform) {
        throw std::invalid_argument("fundamental equation mixes distinct constant exponential factors");
    }
    LinearODE plain = shared ? eq.times_exp(-*shared) : eq;
    FundamentalDE out;
    out.order = plain.order();
    for (const auto& c : plain.coefficients()) out.coefficients.push_back(c.as_polynomial());
    return out;
}

LinearODE FundamentalDE::as_equation() const {
    std::vector<ExpPoly> coeffs;
    for (const auto& c : coefficients) coeffs.emplace_back(c);
    return LinearODE(std::move(coeffs));
}

std::vector<FundamentalDE> leaves(const DecompNode& root) {
    std::vector<FundamentalDE> out;
    std::function<void(const DecompNode&)> visit = [&](const DecompNode& node) {
        if (!node.is_leaf()) {
            for (const auto& child : node.children) visit(child);
            return;
        }
        auto validity = merge(node.region);
        if (validity.empty()) return;
        FundamentalDE leaf = FundamentalDE::from_equation(node.equation);
        leaf.path = node.path;
        leaf.q_path = node.q_path;
        leaf.validity = std::move(validity);
        leaf.strips = node.strips;
        out.push_back(std::move(leaf));
    };
    visit(root);
    return out;
}

FundamentalDE fundamental_leaf(const LinearODE& eq) {
    FundamentalDE leaf = FundamentalDE::from_equation(eq);
    leaf.validity = {Sector::full_circle()};
    return leaf;
}

std::size_t tree_depth(const DecompNode& root) {
    std::size_t depth = 0;
    for (const auto& child : root.children) depth = std::max(depth, 1 + tree_depth(child));
    return depth;
}

}  // namespace crg
