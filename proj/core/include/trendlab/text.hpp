#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace trendlab {

// Shortest decimal string that parses back to the same double (round-trip).
std::string format_number(double value);

// Shortest fixed-notation round-trip string; for prices and equity values
// of moderate magnitude where scientific notation would be unreadable.
std::string format_fixed(double value);

// Strict double parse of the whole field. Throws ParseError.
double parse_number(std::string_view field, std::string_view context);

// RFC-4180 quoting: wraps the field in quotes when it contains a comma,
// quote, or newline.
std::string csv_escape(std::string_view field);

// Splits one CSV record, honoring RFC-4180 quoted fields.
std::vector<std::string> csv_split(std::string_view line);

}  // namespace trendlab
