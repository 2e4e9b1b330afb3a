#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nsq {

// CSV with a header row; fields are written as-is (callers pass plain
// numbers/identifiers), doubles at full round-trip precision.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path) {
    if (!out_) throw std::runtime_error("csv: cannot open " + path);
  }
  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << fields[i];
    }
    out_ << '\n';
  }
  static std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  }
  static std::string num(long v) { return std::to_string(v); }
  static std::string num(int v) { return std::to_string(v); }

 private:
  std::ofstream out_;
};

// Binary PGM (P5), maxval 255, row-major top-down.
inline void write_pgm(const std::string& path, const std::vector<std::uint8_t>& pixels, int width,
                      int height) {
  if (static_cast<std::size_t>(width) * static_cast<std::size_t>(height) != pixels.size())
    throw std::invalid_argument("pgm: pixel count != width * height");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("pgm: cannot open " + path);
  f << "P5\n" << width << " " << height << "\n255\n";
  f.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!f) throw std::runtime_error("pgm: write failed for " + path);
}

}  // namespace nsq
