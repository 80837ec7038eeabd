#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace evolve {

// RFC-4180 rows; numeric fields are printed with 17 significant digits so
// identical runs produce byte-identical artifacts.
class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path) : out_(path) {}

  static std::string quote(const std::string& field) {
    bool needs = field.find_first_of(",\"\n\r") != std::string::npos;
    if (!needs) return field;
    std::string q = "\"";
    for (char c : field) {
      if (c == '"') q += "\"\"";
      else q += c;
    }
    q += "\"";
    return q;
  }

  static std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << quote(fields[i]);
    }
    out_ << "\r\n";
  }

  bool good() const { return out_.good(); }

 private:
  std::ofstream out_;
};

}  // namespace evolve
