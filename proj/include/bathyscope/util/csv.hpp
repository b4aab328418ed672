#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bathyscope {

// Fixed-format CSV emission: identical inputs produce byte-identical files.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open for writing: " + path);
  }

  void header(const std::vector<std::string>& cols) { row_strings(cols); }

  CsvWriter& cell(const std::string& s) {
    sep();
    line_ += s;
    return *this;
  }
  CsvWriter& cell(int64_t v) { return cell(std::to_string(v)); }
  CsvWriter& cell(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return cell(std::string(buf));
  }
  CsvWriter& cell(const std::optional<double>& v) { return v ? cell(*v) : cell(std::string()); }

  void end_row() {
    out_ << line_ << "\n";
    line_.clear();
    first_ = true;
  }

  void row_strings(const std::vector<std::string>& cols) {
    for (const auto& c : cols) cell(c);
    end_row();
  }

 private:
  void sep() {
    if (!first_) line_ += ",";
    first_ = false;
  }
  std::ofstream out_;
  std::string line_;
  bool first_ = true;
};

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace bathyscope
