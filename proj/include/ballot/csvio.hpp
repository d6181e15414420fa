#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ballot {

// RFC 4180 quoting: fields containing comma, quote or newline are wrapped in
// double quotes with embedded quotes doubled
inline std::string csv_escape(const std::string& field) {
  bool needs_quote = field.find_first_of(",\"\n\r") != std::string::npos;
  if (!needs_quote) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

// shortest decimal form that round-trips bit-exactly
inline std::string csv_num(double x) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return std::string(buf);
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header)
      : file_(path), out_(&file_) {
    if (!file_) throw std::runtime_error("cannot open csv for writing: " + path);
    ncols_ = header.size();
    write_row_strings(header);
  }

  // non-owning variant, mainly for tests
  CsvWriter(std::ostream& os, const std::vector<std::string>& header) : out_(&os) {
    ncols_ = header.size();
    write_row_strings(header);
  }

  void write_row_strings(const std::vector<std::string>& fields) {
    if (fields.size() != ncols_) throw std::runtime_error("csv row width mismatch");
    for (size_t i = 0; i < fields.size(); ++i) {
      if (i) *out_ << ',';
      *out_ << csv_escape(fields[i]);
    }
    *out_ << '\n';
  }

  void write_row(const std::vector<double>& vals) {
    std::vector<std::string> fields;
    fields.reserve(vals.size());
    for (double v : vals) fields.push_back(csv_num(v));
    write_row_strings(fields);
  }

  void flush() { out_->flush(); }

 private:
  std::ofstream file_;
  std::ostream* out_ = nullptr;
  size_t ncols_ = 0;
};

}  // namespace ballot
