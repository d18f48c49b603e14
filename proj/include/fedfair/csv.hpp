#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fedfair::csv {

// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double v);

// Strict parsers; `where` names the location in error messages.
double parse_double(std::string_view text, const std::string& where);
std::int32_t parse_int32(std::string_view text, const std::string& where);

// Naive comma split; this library's CSV dialect has no quoting or escapes
// (all cells are numeric, headers are identifiers).
std::vector<std::string> split_line(std::string_view line);

std::string join_line(const std::vector<std::string>& cells);

}  // namespace fedfair::csv
