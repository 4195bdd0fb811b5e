#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "errors.hpp"

namespace hawkes_agg {

// The single interchange format: comma-separated cells under one header row,
// preceded by '# key = value' metadata lines. Cells are numbers or simple
// labels; there is no quoting, so cells must not contain commas or newlines.
struct CsvFile {
  Config metadata;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> row_lines;  // source line per row; empty for built tables
};

inline void write_csv(std::ostream& os, const CsvFile& file) {
  for (const auto& [k, v] : file.metadata) os << "# " << k << " = " << v << "\n";
  for (std::size_t i = 0; i < file.columns.size(); ++i)
    os << (i ? "," : "") << file.columns[i];
  os << "\n";
  for (const auto& row : file.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << "\n";
  }
}

inline void save_csv(const std::string& path, const CsvFile& file) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open for writing: " + path);
  write_csv(out, file);
  if (!out) throw std::invalid_argument("write failed: " + path);
}

// `name` labels error messages. Metadata may appear anywhere; '#' lines that
// are not `key = value` are plain comments. Ragged rows are fatal, with the
// line number.
inline CsvFile read_csv(std::istream& in, const std::string& name) {
  CsvFile file;
  std::string line;
  int lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    if (body[0] == '#') {
      std::string key, value;
      if (detail::parse_kv(body.substr(1), key, value)) file.metadata[key] = value;
      continue;
    }
    auto cells = detail::split(body, ',');
    if (!have_header) {
      file.columns = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != file.columns.size())
      throw data_error(name + " line " + std::to_string(lineno) + ": expected " +
                       std::to_string(file.columns.size()) + " fields, got " +
                       std::to_string(cells.size()));
    file.rows.push_back(std::move(cells));
    file.row_lines.push_back(lineno);
  }
  if (!have_header) throw data_error(name + ": no header row");
  return file;
}

inline CsvFile load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open: " + path);
  return read_csv(in, path);
}

// Locates a named column or reports the available ones.
inline std::size_t column_index(const CsvFile& file, const std::string& name) {
  for (std::size_t i = 0; i < file.columns.size(); ++i)
    if (file.columns[i] == name) return i;
  std::string have;
  for (std::size_t i = 0; i < file.columns.size(); ++i)
    have += (i ? ", " : "") + file.columns[i];
  throw std::invalid_argument("no column '" + name + "' (columns: " + have + ")");
}

}  // namespace hawkes_agg
