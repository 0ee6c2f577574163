#include "kmpath/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "kmpath/errors.hpp"

namespace kmpath {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open " + path + " for writing");
  if (!header.empty()) out << header << '\n';
  std::string line;
  for (const auto& row : rows) {
    line.clear();
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) line += ',';
      line += format_double(row[i]);
    }
    out << line << '\n';
  }
  if (!out) throw config_error("write failed for " + path);
}

CsvTable read_csv(const std::string& path, bool expect_header) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open " + path + " for reading");
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool header_pending = expect_header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header_pending) {
      table.header = line;
      header_pending = false;
      continue;
    }
    std::vector<double> row;
    std::size_t start = 0;
    while (start <= line.size()) {
      const std::size_t comma = line.find(',', start);
      const std::string cell =
          line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0') {
        throw config_error(path + ":" + std::to_string(line_no) + ": malformed number '" +
                           cell + "'");
      }
      row.push_back(v);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    table.rows.push_back(std::move(row));
  }
  if (expect_header && table.header.empty()) {
    throw config_error(path + ": missing header row");
  }
  return table;
}

}  // namespace kmpath
