// Linear ODEs with exponential-polynomial coefficients, their normal-form
// grouping and the recursive tree of coefficient differential equations that
// ends in polynomial-coefficient ("fundamental") equations.
#pragma once

#include <complex>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "crg/exppoly.hpp"
#include "crg/geometry.hpp"

namespace crg {

/// sum_m coefficients[m] * f^(m) = 0.  The top coefficient is nonzero.
class LinearODE {
public:
    /// The trivial equation f = 0.
    LinearODE() : coeffs_{ExpPoly(ExactComplex(1))} {}
    /// Trailing zero coefficients are dropped; throws std::invalid_argument
    /// when every coefficient is zero.
    explicit LinearODE(std::vector<ExpPoly> coefficients);

    /// Equation DSL: e.g. "f''' + 3*exp(z)*f'' - (exp(z) - 16/27)*f = 0".
    static LinearODE parse(const std::string& text);

    unsigned order() const { return static_cast<unsigned>(coeffs_.size() - 1); }
    const std::vector<ExpPoly>& coefficients() const { return coeffs_; }
    const ExpPoly& coefficient(unsigned m) const { return coeffs_.at(m); }
    const ExpPoly& leading() const { return coeffs_.back(); }

    bool is_monic() const { return leading() == ExpPoly(ExactComplex(1)); }
    bool is_polynomial() const;
    unsigned exponent_degree() const;

    LinearODE times_exp(const Poly& shift) const;

    friend bool operator==(const LinearODE&, const LinearODE&) = default;

private:
    std::vector<ExpPoly> coeffs_;
};

std::string to_string(const LinearODE& eq);

/// Raised when grouping is asked of an equation whose coefficients are all
/// polynomials.
class AlreadyFundamental : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct GroupedODE {
    unsigned s = 0;
    /// Ordered by q; q values pairwise distinct.
    std::vector<std::pair<ExactComplex, LinearODE>> groups;

    /// sum_q e^{q z^s} * (group equation), as one LinearODE.
    LinearODE reassemble() const;
};

/// Groups by the z^s coefficient of the exponents, s = exponent degree.
/// Throws AlreadyFundamental for polynomial-coefficient equations.
GroupedODE group(const LinearODE& eq);
/// Same, at an explicit power (groups may collapse to q = 0 only).
GroupedODE group_at(const LinearODE& eq, unsigned power);

/// sum_m coefficient_m(z) * f^(m)(z).  `derivatives` maps order -> value and
/// must cover 0..order; throws std::invalid_argument otherwise.
std::complex<double> apply(const LinearODE& eq, std::complex<double> z,
                           const std::map<unsigned, std::complex<double>>& derivatives);
/// Multiprecision variant at the calling thread's precision.
Complex apply(const LinearODE& eq, const Complex& z, const std::vector<Complex>& derivatives);

/// How a node's leading coefficient sits on its parent's hull.
enum class HullRole { Root, Vertex, Edge, Interior, Single };

std::string to_string(HullRole role);

struct DecompNode {
    std::vector<std::size_t> path;  // group index chosen at each level
    std::vector<ExactComplex> q_path;
    unsigned level = 0;   // 0 for the root
    unsigned power = 0;   // grouping power used for this node's children
    ExactComplex q;       // this node's leading coefficient (root: 0)
    HullRole role = HullRole::Root;
    LinearODE equation;
    std::optional<FrequencyHull> hull;      // of the children's conjugated q
    std::optional<SectorSystem> sectors;    // of that hull, when it has >= 2 vertices
    /// Preimages under z -> z^(parent power) of this node's sector at the
    /// parent level (dominance sector for vertices, critical strip for edges).
    std::vector<Sector> lifted_sectors;
    /// Accumulated region in the z-plane: parent's region intersected with
    /// lifted_sectors.
    std::vector<Sector> region;
    /// For edge nodes: parabolic strips around the lifted critical rays.
    std::vector<ParabolicStrip> strips;
    std::vector<DecompNode> children;

    bool is_leaf() const { return children.empty(); }
};

struct FundamentalDE {
    unsigned order = 0;
    std::vector<Poly> coefficients;  // index m for f^(m)
    std::vector<std::size_t> path;
    std::vector<ExactComplex> q_path;
    std::vector<Sector> validity;
    std::vector<ParabolicStrip> strips;

    /// Raises if coefficients still contain exponentials; drops a common
    /// e^c factor when every term shares it.
    static FundamentalDE from_equation(const LinearODE& eq);
    LinearODE as_equation() const;
};

/// Aperture used for the parabolic strips attached to edge nodes.
inline constexpr double kStripAperture = 0.4;

/// Recursive grouping.  Throws AlreadyFundamental for polynomial input and
/// std::logic_error if the recursion exceeds the exponent degree.
DecompNode build_tree(const LinearODE& eq, double epsilon);

/// Critical rays of every level, lifted into the z-plane, deduplicated.
struct ExceptionalRay {
    double angle;
    unsigned level;
    bool lifted;  // level grouping power > 1
};
std::vector<ExceptionalRay> exceptional_rays(const DecompNode& root);

/// One FundamentalDE per leaf with nonempty validity.
std::vector<FundamentalDE> leaves(const DecompNode& root);

/// Fundamental fast path for polynomial-coefficient input: one leaf valid
/// on the full circle.
FundamentalDE fundamental_leaf(const LinearODE& eq);

std::size_t tree_depth(const DecompNode& root);

}  // namespace crg
