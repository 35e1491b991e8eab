#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace pseudolab {

/// Shortest decimal rendering that round-trips to the same double.
std::string format_double(double value);

/// Parses a complete decimal floating-point token; nullopt on any garbage.
std::optional<double> parse_double(std::string_view text);

/// Parses a complete signed integer token.
std::optional<long long> parse_int(std::string_view text);

}  // namespace pseudolab
