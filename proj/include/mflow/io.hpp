#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mflow {

/// Shortest "%.17g" rendering; round-trips every finite double.
std::string format_number(double value);

/// Writes `content` to `path` through a temporary sibling and a rename, so a
/// failed write never leaves a partial file behind.
void write_file_atomic(const std::string& path, std::string_view content);

/// Splits one CSV line on commas and trims surrounding blanks from each cell.
std::vector<std::string> split_csv_line(const std::string& line);

/// Parses a full cell as a finite double; `context` prefixes the error message.
double parse_csv_number(const std::string& cell, const std::string& context);

}  // namespace mflow
