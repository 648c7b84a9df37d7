// Report serialization: JSON, CSV traces and the SVG indicator plot.
#pragma once

#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "crg/pipeline.hpp"
#include "json.hpp"

namespace crg {

/// Raised when a report lacks the section an exporter needs.
class MissingSection : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// 12 significant digits; non-finite values become null.
nlohmann::json number(double value);

/// Keys are sorted and floats rounded, so equal inputs give equal bytes.
/// Timing is included only when `with_timing` is set.
nlohmann::json to_json(const PipelineReport& report, bool with_timing = false);

/// theta,r,log_abs_f,filtered; one row per sample, rays in grid order.
void write_traces_csv(std::ostream& out, const std::vector<RayTrace>& traces);

/// Polar plot of h_hat over the candidate curves with excluded zones
/// shaded, from a report produced by to_json.  Throws MissingSection
/// without a verification section or with an empty theta grid.
std::string render_svg(const nlohmann::json& report);

}  // namespace crg
