#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "tcrom/error.hpp"

namespace tcrom {

/// Shortest lossless decimal form; fixed formatting keeps metric files
/// byte-identical across runs with the same seeds.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : os_(path) {
    if (!os_) throw ValidationError("cannot open '" + path + "' for writing");
  }

  void header(const std::vector<std::string>& names) { raw_row(names); }

  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) os_ << ',';
      os_ << fmt_double(values[i]);
    }
    os_ << '\n';
  }

  /// Label column followed by numeric columns.
  void row(const std::string& label, const std::vector<double>& values) {
    os_ << label;
    for (double v : values) os_ << ',' << fmt_double(v);
    os_ << '\n';
  }

  void raw_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os_ << ',';
      os_ << cells[i];
    }
    os_ << '\n';
  }

 private:
  std::ofstream os_;
};

}  // namespace tcrom
