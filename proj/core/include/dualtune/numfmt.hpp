#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace dualtune {

// Presentation rounding: half away from zero, two decimals. Internal math
// stays unrounded; rounding happens only when rendering.
double round2(double value);
std::string format_2dp(double value);

// Like format_2dp with an explicit sign marker on nonzero values.
std::string format_signed_2dp(double value);

// Shortest decimal that round-trips to the same double; for data files
// that must carry exact values.
std::string format_shortest(double value);

// Whole-string parse; nullopt on trailing garbage or empty input.
std::optional<double> parse_double(std::string_view text);

}  // namespace dualtune
