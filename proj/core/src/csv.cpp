#include "vbench/util/csv.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vbench::util {

std::string csv_escape(const std::string& field) {
  bool needs_quote = field.find_first_of(",\"\r\n") != std::string::npos;
  if (!needs_quote) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += csv_escape(fields[i]);
  }
  out.push_back('\n');
  return out;
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool any_field = false;
  char c;
  auto end_field = [&] {
    row.push_back(field);
    field.clear();
    any_field = true;
  };
  auto end_row = [&] {
    end_field();
    if (table.header.empty())
      table.header = row;
    else
      table.rows.push_back(row);
    row.clear();
    any_field = false;
  };
  while (in.get(c)) {
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r') {
      // swallowed; row ends at the following '\n'
    } else if (c == '\n') {
      end_row();
    } else {
      field.push_back(c);
    }
  }
  if (!field.empty() || any_field) end_row();  // final line without trailing newline
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open CSV file: " + path);
  return read_csv(in);
}

}  // namespace vbench::util
