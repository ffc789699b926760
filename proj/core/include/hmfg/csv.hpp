#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace hmfg::csv {

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double value);

/// Writes one comma-separated row terminated by '\n'.
void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// Parsed CSV table with a header row. No quoting support; the artifacts
/// written by this project never contain commas inside fields.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a named column; throws std::invalid_argument if absent.
  std::size_t column(std::string_view name) const;
};

Table read(std::istream& in);
Table read_file(const std::string& path);

double parse_double(std::string_view text);
long long parse_int(std::string_view text);

}  // namespace hmfg::csv
