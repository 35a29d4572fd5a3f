#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "scorelab/errors.hpp"

namespace scorelab::cli {

// Minimal CSV emitter: always writes a header row, '.' decimal separator
// regardless of locale (numbers are formatted by the caller via
// format_double / std::to_string).
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header)
      : out_(path, std::ios::binary) {
    if (!out_) throw ConfigError("csv: cannot open '" + path + "'");
    write_row(header);
  }

  void write_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
};

}  // namespace scorelab::cli
