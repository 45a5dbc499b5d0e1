#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vbench::util {

// RFC 4180 quoting: fields holding comma, quote, CR or LF are quoted,
// embedded quotes doubled. Everything else passes through unchanged.
std::string csv_escape(const std::string& field);
std::string csv_row(const std::vector<std::string>& fields);  // includes trailing '\n'

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// RFC 4180 reader (handles quoted fields with embedded separators/newlines).
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);  // throws std::runtime_error if unreadable

}  // namespace vbench::util
