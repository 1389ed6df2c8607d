#ifndef STORM_TOOLS_SVG_HPP
#define STORM_TOOLS_SVG_HPP

#include <string>

namespace storm::cli {

// Renders a static SVG line chart from CSV text with a header row. The first
// column is x; every further column except one named "yerr"/"stderr" becomes
// a line; an error column draws bars on the preceding line. log_log switches
// both axes to log scale (positive data only).
std::string svg_line_chart(const std::string& csv, const std::string& title,
                           bool log_log);

}  // namespace storm::cli

#endif
