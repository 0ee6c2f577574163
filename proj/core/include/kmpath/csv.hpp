#pragma once

#include <string>
#include <vector>

namespace kmpath {

// Shortest decimal form that round-trips a double exactly.
std::string format_double(double v);

struct CsvTable {
  std::string header;
  std::vector<std::vector<double>> rows;
};

// Writes header (when non-empty) then one comma-joined line per row.
// Rows may differ in length.
void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<double>>& rows);

CsvTable read_csv(const std::string& path, bool expect_header);

}  // namespace kmpath
