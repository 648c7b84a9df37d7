#include "crg/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace crg {

using nlohmann::json;

json number(double value) {
    if (!std::isfinite(value)) return nullptr;
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.12g", value);
    return std::strtod(buffer, nullptr);
}

namespace {

json complex_json(std::complex<double> z) { return json::array({number(z.real()), number(z.imag())}); }

json sector_json(const Sector& s) { return {{"lo", number(s.lo)}, {"hi", number(s.hi)}, {"closed", s.closed}}; }

json sectors_json(const std::vector<Sector>& sectors) {
    json out = json::array();
    for (const auto& s : sectors) out.push_back(sector_json(s));
    return out;
}

json strips_json(const std::vector<ParabolicStrip>& strips) {
    json out = json::array();
    for (const auto& s : strips) out.push_back({{"axis", number(s.axis)}, {"aperture", number(s.aperture)}});
    return out;
}

json exact_list(const std::vector<ExactComplex>& values) {
    json out = json::array();
    for (const auto& v : values) out.push_back(to_string(v));
    return out;
}

json node_json(const DecompNode& node) {
    json out = {{"level", node.level},
                {"path", node.path},
                {"q", to_string(node.q)},
                {"q_path", exact_list(node.q_path)},
                {"role", to_string(node.role)},
                {"power", node.power},
                {"equation", to_string(node.equation)},
                {"lifted_sectors", sectors_json(node.lifted_sectors)},
                {"region", sectors_json(node.region)},
                {"strips", strips_json(node.strips)}};
    json children = json::array();
    for (const auto& child : node.children) children.push_back(node_json(child));
    out["children"] = std::move(children);
    return out;
}

void collect_hulls(const DecompNode& node, json& out) {
    if (node.hull) {
        json rays = json::array();
        for (double a : critical_rays(*node.hull)) rays.push_back(number(a));
        out.push_back({{"level", node.level + 1},
                       {"path", node.path},
                       {"points", exact_list(node.hull->points)},
                       {"vertices", exact_list(node.hull->vertices)},
                       {"critical_rays", std::move(rays)}});
    }
    for (const auto& child : node.children) collect_hulls(child, out);
}

json candidate_json(const IndicatorCandidate& c) {
    return {{"id", c.id()},     {"rho", to_string(c.rho)}, {"rho_value", number(to_double(c.rho))},
            {"a", complex_json(c.a)}, {"leaf", c.leaf},   {"branch", c.branch}};
}

json config_json(const IntegratorConfig& c) {
    return {{"precision", c.precision},   {"rel_tol", number(c.rel_tol)},     {"abs_tol", number(c.abs_tol)},
            {"r0", number(c.r0)},         {"rmax", number(c.rmax)},           {"samples_per_ray", c.samples_per_ray},
            {"stages", c.stages},         {"max_steps", c.max_steps},
            {"rescale_threshold", number(c.rescale_threshold)}};
}

json verification_json(const PipelineReport& report) {
    const VerificationReport& v = *report.verification;
    json rows = json::array();
    for (const auto& row : v.per_theta) {
        json r = {{"theta", number(row.theta)},
                  {"excluded", row.excluded},
                  {"reason", to_string(row.reason)},
                  {"h_hat", row.h_hat ? number(*row.h_hat) : json(nullptr)},
                  {"predicted", number(row.predicted)},
                  {"error", number(row.error)},
                  {"note", row.note}};
        r["matched"] = row.matched ? json(row.matched->id()) : json(nullptr);
        r["a"] = row.matched ? complex_json(row.matched->a) : json(nullptr);
        rows.push_back(std::move(r));
    }
    json zones = json::array();
    for (const auto& z : v.excluded_zones)
        zones.push_back({{"lo", number(z.sector.lo)}, {"hi", number(z.sector.hi)}, {"reason", to_string(z.reason)}});
    json rays = json::array();
    for (const auto& t : v.traces) {
        json ray = {{"theta", number(t.theta)},
                    {"truncated", t.truncated},
                    {"diagnostic", t.diagnostic},
                    {"steps", t.steps},
                    {"rejected", t.rejected},
                    {"filtered_fraction", number(t.filtered_fraction)}};
        if (!t.samples.empty()) {
            ray["final_r"] = number(t.samples.back().r);
            ray["final_log_abs_f"] = number(t.samples.back().log_abs_f);
        }
        rays.push_back(std::move(ray));
    }
    json out = {{"pass", v.pass},
                {"coherent", v.coherent},
                {"rho_hat", number(v.rho_hat)},
                {"rho", v.rho ? number(*v.rho) : json(nullptr)},
                {"max_error", number(v.max_error)},
                {"diagnostics", v.diagnostics},
                {"per_theta", std::move(rows)},
                {"excluded_zones", std::move(zones)},
                {"rays", std::move(rays)},
                {"init", report.init_kind},
                {"tolerance", number(report.verify_options.tolerance)},
                {"exclusion_half_width", number(report.verify_options.exclusion_half_width)},
                {"selection", report.verify_options.selection == Selection::Max ? "max" : "match"},
                {"notes", report.notes}};
    if (report.config) out["config"] = config_json(*report.config);
    return out;
}

}  // namespace

json to_json(const PipelineReport& report, bool with_timing) {
    const Analysis& a = report.analysis;
    json out;
    out["schema"] = PipelineReport::kSchema;
    out["equation"] = to_string(a.equation);
    out["order"] = a.equation.order();
    out["epsilon"] = number(a.epsilon);

    if (a.normal_form) {
        json groups = json::array();
        for (const auto& [q, eq] : a.normal_form->groups) groups.push_back({{"q", to_string(q)}, {"equation", to_string(eq)}});
        out["normal_form"] = {{"s", a.normal_form->s}, {"groups", std::move(groups)}};
    }
    if (a.tree) {
        json hulls = json::array();
        collect_hulls(*a.tree, hulls);
        out["hulls"] = std::move(hulls);
        out["tree"] = node_json(*a.tree);
        out["depth"] = tree_depth(*a.tree);
    }

    json rays = json::array();
    for (const auto& r : a.critical_rays) rays.push_back({{"angle", number(r.angle)}, {"level", r.level}, {"lifted", r.lifted}});
    out["critical_rays"] = std::move(rays);

    json leaves = json::array(), branches = json::array(), stokes = json::array();
    for (std::size_t i = 0; i < a.leaves.size(); ++i) {
        const auto& leaf = a.leaves[i];
        json coefficients = json::array();
        for (const auto& p : leaf.coefficients) coefficients.push_back(to_string(p));
        leaves.push_back({{"index", i},
                          {"order", leaf.order},
                          {"path", leaf.path},
                          {"q_path", exact_list(leaf.q_path)},
                          {"coefficients", std::move(coefficients)},
                          {"validity", sectors_json(leaf.validity)},
                          {"strips", strips_json(leaf.strips)}});
        const auto& analysis = a.leaf_analyses[i];
        for (std::size_t b = 0; b < analysis.branches.size(); ++b) {
            const auto& branch = analysis.branches[b];
            json terms = json::array();
            for (const auto& t : branch.puiseux)
                terms.push_back({{"mu", to_string(t.mu)},
                                 {"a", complex_json(t.approx())},
                                 {"exact", t.exact ? json(to_string(*t.exact)) : json(nullptr)}});
            branches.push_back({{"leaf", i},
                                {"index", b},
                                {"p", branch.p},
                                {"multiplicity", branch.multiplicity},
                                {"log_correction", branch.log_correction},
                                {"multiplicity_uncertain", branch.multiplicity_uncertain},
                                {"terms", std::move(terms)}});
        }
        for (const auto& s : analysis.stokes)
            stokes.push_back({{"leaf", i},
                              {"angle", number(s.angle)},
                              {"first", s.first},
                              {"second", s.second},
                              {"mu", to_string(s.mu)}});
    }
    out["leaves"] = std::move(leaves);
    out["branches"] = std::move(branches);
    out["branch_count"] = a.branch_count();
    out["stokes_rays"] = std::move(stokes);

    json pieces = json::array();
    for (const auto& piece : a.candidates) {
        json cands = json::array();
        for (const auto& c : piece.candidates) cands.push_back(candidate_json(c));
        pieces.push_back({{"leaf", piece.leaf}, {"sector", sector_json(piece.sector)}, {"candidates", std::move(cands)}});
    }
    out["indicator_candidates"] = std::move(pieces);

    json exceptional = json::array();
    for (const auto& d : a.exceptional) exceptional.push_back({{"angle", number(d.angle)}, {"reason", to_string(d.reason)}});
    out["exceptional_directions"] = std::move(exceptional);

    if (report.verification) out["verification"] = verification_json(report);
    if (with_timing)
        out["timing"] = {{"analyze_ms", number(report.timing.analyze_ms)}, {"verify_ms", number(report.timing.verify_ms)}};
    return out;
}

void write_traces_csv(std::ostream& out, const std::vector<RayTrace>& traces) {
    out << "theta,r,log_abs_f,filtered\n";
    char line[128];
    for (const auto& t : traces) {
        for (std::size_t i = 0; i < t.samples.size(); ++i) {
            const bool filtered = i < t.filtered.size() && t.filtered[i];
            std::snprintf(line, sizeof line, "%.12g,%.12g,%.12g,%d\n", t.theta, t.samples[i].r, t.samples[i].log_abs_f,
                          filtered ? 1 : 0);
            out << line;
        }
    }
}

namespace {

constexpr double kSize = 640;
constexpr double kCenter = kSize / 2;
constexpr double kInner = 50;
constexpr double kOuter = 250;
constexpr const char* kPalette[] = {"#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf", "#bcbd22"};

std::string fmt(double v) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.2f", v);
    return buffer;
}

std::string escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Curve {
    std::string id;
    std::string color;
    std::vector<std::pair<double, double>> points;  // theta, value
};

/// Screen position of polar (theta, r); y points down.
std::string point(double theta, double r) {
    return fmt(kCenter + r * std::cos(theta)) + "," + fmt(kCenter - r * std::sin(theta));
}

/// Maps indicator values linearly onto radii in [kInner, kOuter].
class PolarFrame {
public:
    PolarFrame(double lo, double hi) : lo_(lo), hi_(hi > lo ? hi : lo + 1) {}

    double radius(double value) const { return kInner + (value - lo_) / (hi_ - lo_) * (kOuter - kInner); }
    double lo() const { return lo_; }
    double hi() const { return hi_; }

private:
    double lo_, hi_;
};

/// Annular wedge from theta lo to hi, counterclockwise on screen.
std::string wedge(double lo, double hi) {
    const int large = hi - lo > kPi ? 1 : 0;
    std::string d = "M " + point(lo, kInner) + " L " + point(lo, kOuter);
    d += " A " + fmt(kOuter) + " " + fmt(kOuter) + " 0 " + std::to_string(large) + " 0 " + point(hi, kOuter);
    d += " L " + point(hi, kInner);
    d += " A " + fmt(kInner) + " " + fmt(kInner) + " 0 " + std::to_string(large) + " 1 " + point(lo, kInner) + " Z";
    return d;
}

double candidate_value(const json& c, double theta) {
    const double rho = c.at("rho_value").get<double>();
    const double re = c.at("a").at(0).get<double>(), im = c.at("a").at(1).get<double>();
    return (std::complex<double>(re, im) * std::polar(1.0, rho * normalize_angle(theta))).real();
}

}  // namespace

std::string render_svg(const json& report) {
    if (!report.contains("verification") || report.at("verification").is_null())
        throw MissingSection("report has no verification section");
    const json& v = report.at("verification");
    if (!v.contains("per_theta") || v.at("per_theta").empty()) throw MissingSection("report has an empty theta grid");

    const bool has_rho = v.contains("rho") && !v.at("rho").is_null();
    const double rho = has_rho ? v.at("rho").get<double>() : 0.0;

    std::vector<Curve> curves;
    if (report.contains("indicator_candidates")) {
        std::size_t color = 0;
        for (const auto& piece : report.at("indicator_candidates")) {
            const double lo = piece.at("sector").at("lo").get<double>();
            const double hi = piece.at("sector").at("hi").get<double>();
            for (const auto& c : piece.at("candidates")) {
                if (has_rho && std::abs(c.at("rho_value").get<double>() - rho) > 1e-12) continue;
                Curve curve{c.at("id").get<std::string>(), kPalette[color++ % std::size(kPalette)], {}};
                const int steps = std::max(2, static_cast<int>(std::ceil((hi - lo) / (kPi / 180))));
                for (int k = 0; k <= steps; ++k) {
                    const double theta = lo + (hi - lo) * k / steps;
                    curve.points.emplace_back(theta, candidate_value(c, theta));
                }
                curves.push_back(std::move(curve));
            }
        }
    }

    std::vector<std::pair<double, double>> estimates;
    std::vector<bool> within;
    const double tolerance = v.contains("tolerance") ? v.at("tolerance").get<double>() : 0.05;
    for (const auto& row : v.at("per_theta")) {
        if (row.at("excluded").get<bool>() || row.at("h_hat").is_null()) continue;
        estimates.emplace_back(row.at("theta").get<double>(), row.at("h_hat").get<double>());
        within.push_back(!row.at("matched").is_null() && row.at("error").get<double>() <= tolerance);
    }

    double lo = 0, hi = 0;
    for (const auto& c : curves)
        for (const auto& [t, value] : c.points) lo = std::min(lo, value), hi = std::max(hi, value);
    for (const auto& [t, value] : estimates) lo = std::min(lo, value), hi = std::max(hi, value);
    const double pad = 0.05 * std::max(hi - lo, 1e-9);
    const PolarFrame frame(lo - pad, hi + pad);

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(kSize) << "\" height=\"" << fmt(kSize + 60)
        << "\" viewBox=\"0 0 " << fmt(kSize) << " " << fmt(kSize + 60) << "\" font-family=\"sans-serif\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    svg << "<g id=\"excluded\" fill=\"#d9d9d9\" stroke=\"none\">\n";
    if (v.contains("excluded_zones"))
        for (const auto& z : v.at("excluded_zones"))
            svg << "<path d=\"" << wedge(z.at("lo").get<double>(), z.at("hi").get<double>()) << "\"><title>"
                << escape(z.at("reason").get<std::string>()) << "</title></path>\n";
    svg << "</g>\n";

    svg << "<g id=\"grid\" fill=\"none\" stroke=\"#999999\" stroke-width=\"0.5\">\n";
    svg << "<circle cx=\"" << fmt(kCenter) << "\" cy=\"" << fmt(kCenter) << "\" r=\"" << fmt(kInner) << "\"/>\n";
    svg << "<circle cx=\"" << fmt(kCenter) << "\" cy=\"" << fmt(kCenter) << "\" r=\"" << fmt(kOuter) << "\"/>\n";
    if (frame.lo() < 0 && frame.hi() > 0)
        svg << "<circle cx=\"" << fmt(kCenter) << "\" cy=\"" << fmt(kCenter) << "\" r=\"" << fmt(frame.radius(0))
            << "\" stroke-dasharray=\"4 3\"/>\n";
    for (int k = 0; k < 4; ++k)
        svg << "<line x1=\"" << fmt(kCenter) << "\" y1=\"" << fmt(kCenter) << "\" x2=\""
            << fmt(kCenter + kOuter * std::cos(k * kPi / 2)) << "\" y2=\"" << fmt(kCenter - kOuter * std::sin(k * kPi / 2))
            << "\"/>\n";
    svg << "</g>\n";

    svg << "<g id=\"labels\" font-size=\"12\" fill=\"#333333\">\n";
    const char* axis_labels[] = {"0", "π/2", "π", "3π/2"};
    for (int k = 0; k < 4; ++k)
        svg << "<text x=\"" << fmt(kCenter + (kOuter + 18) * std::cos(k * kPi / 2)) << "\" y=\""
            << fmt(kCenter - (kOuter + 18) * std::sin(k * kPi / 2) + 4) << "\" text-anchor=\"middle\">" << axis_labels[k]
            << "</text>\n";
    svg << "<text x=\"" << fmt(kCenter + kInner + 2) << "\" y=\"" << fmt(kCenter - 3) << "\">" << fmt(frame.lo())
        << "</text>\n";
    svg << "<text x=\"" << fmt(kCenter + kOuter + 2) << "\" y=\"" << fmt(kCenter - 3) << "\">" << fmt(frame.hi())
        << "</text>\n";
    svg << "</g>\n";

    svg << "<g id=\"candidates\" fill=\"none\" stroke-width=\"1.5\">\n";
    for (const auto& c : curves) {
        svg << "<polyline stroke=\"" << c.color << "\" points=\"";
        for (std::size_t i = 0; i < c.points.size(); ++i)
            svg << (i ? " " : "") << point(c.points[i].first, frame.radius(c.points[i].second));
        svg << "\"><title>" << escape(c.id) << "</title></polyline>\n";
    }
    svg << "</g>\n";

    svg << "<g id=\"estimates\" stroke=\"none\">\n";
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const auto [theta, value] = estimates[i];
        const std::string xy = point(theta, frame.radius(value));
        const auto comma = xy.find(',');
        svg << "<circle cx=\"" << xy.substr(0, comma) << "\" cy=\"" << xy.substr(comma + 1) << "\" r=\"2.5\" fill=\""
            << (within[i] ? "#1f77b4" : "#d62728") << "\"/>\n";
    }
    svg << "</g>\n";

    svg << "<g id=\"legend\" font-size=\"12\" fill=\"#333333\">\n";
    std::string title = report.contains("equation") ? report.at("equation").get<std::string>() : std::string();
    svg << "<text x=\"10\" y=\"" << fmt(kSize + 20) << "\">" << escape(title) << "</text>\n";
    std::string summary = "rho_hat = " + (v.at("rho_hat").is_null() ? std::string("n/a") : fmt(v.at("rho_hat").get<double>()));
    summary += v.at("pass").get<bool>() ? "   pass" : "   fail";
    summary += "   dots: h_hat (blue within " + fmt(tolerance) + ", red otherwise); lines: candidates; grey: excluded";
    svg << "<text x=\"10\" y=\"" << fmt(kSize + 40) << "\">" << escape(summary) << "</text>\n";
    svg << "</g>\n";
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace crg
