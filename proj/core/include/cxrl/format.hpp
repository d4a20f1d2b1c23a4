#pragma once

#include <string>
#include <string_view>

namespace cxrl {

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);
/// Strict inverse of format_double; throws std::invalid_argument on junk.
double parse_double(std::string_view text);

/// Fixed-point rendering for human-facing output ("49.0000").
std::string format_fixed(double value, int decimals);
/// format_fixed without trailing zeros ("49", "37.79").
std::string format_compact(double value, int decimals);

}  // namespace cxrl
