#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace ctkg {

/// [A-Za-z_][A-Za-z0-9_]*
bool is_identifier(std::string_view text) noexcept;

/// Parses an ISO-8601 date-time (YYYY-MM-DDTHH:MM:SS[.fff][Z|+HH:MM|-HH:MM])
/// into seconds since the Unix epoch. A missing zone designator means UTC.
std::optional<double> parse_timestamp(std::string_view text) noexcept;

inline bool is_timestamp(std::string_view text) noexcept {
  return parse_timestamp(text).has_value();
}

/// Formats seconds since the epoch as YYYY-MM-DDTHH:MM:SSZ (whole seconds).
std::string format_timestamp(long long epoch_seconds);

/// Strict decimal parse: the whole input must be a finite number.
std::optional<double> parse_decimal(std::string_view text) noexcept;

/// Shortest round-trip representation that always reads back as a decimal
/// (contains a '.' or an exponent), e.g. 3 -> "3.0", 1e20 -> "1.0e+20".
std::string format_decimal(double value);

}  // namespace ctkg
