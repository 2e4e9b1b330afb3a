#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nsq {

// Minimal RIFF/WAVE handling for the one format in scope: PCM16, mono.
// Everything else is rejected with a specific diagnostic (no resampling).

struct WavData {
  std::vector<double> samples;  // in [-1, 1)
  double sample_rate = 16000.0;
};

namespace detail {

inline std::uint32_t rd_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t rd_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace detail

inline WavData read_wav_pcm16_mono(const std::string& path, double expected_rate = 16000.0) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("wav: cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw std::runtime_error("wav: not a RIFF/WAVE file: " + path);
  WavData out;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    std::uint32_t size = detail::rd_u32(bytes.data() + pos + 4);
    pos += 8;
    if (pos + size > bytes.size()) throw std::runtime_error("wav: truncated chunk in " + path);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (size < 16) throw std::runtime_error("wav: malformed fmt chunk in " + path);
      std::uint16_t format = detail::rd_u16(bytes.data() + pos);
      std::uint16_t channels = detail::rd_u16(bytes.data() + pos + 2);
      std::uint32_t rate = detail::rd_u32(bytes.data() + pos + 4);
      std::uint16_t bits = detail::rd_u16(bytes.data() + pos + 14);
      if (format != 1) throw std::runtime_error("wav: only PCM supported, got format tag " + std::to_string(format));
      if (channels != 1) throw std::runtime_error("wav: only mono supported, got " + std::to_string(channels) + " channels");
      if (bits != 16) throw std::runtime_error("wav: only 16-bit supported, got " + std::to_string(bits));
      if (expected_rate > 0.0 && rate != static_cast<std::uint32_t>(expected_rate))
        throw std::runtime_error("wav: expected " + std::to_string(static_cast<int>(expected_rate)) +
                                 " Hz, got " + std::to_string(rate));
      out.sample_rate = static_cast<double>(rate);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      if (!have_fmt) throw std::runtime_error("wav: data chunk before fmt in " + path);
      const std::size_t n = size / 2;
      out.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        std::int16_t s;
        std::memcpy(&s, bytes.data() + pos + 2 * i, 2);
        out.samples[i] = static_cast<double>(s) / 32768.0;
      }
      return out;
    }
    pos += size + (size & 1);  // chunks are word-aligned
  }
  throw std::runtime_error("wav: no data chunk in " + path);
}

inline void write_wav_pcm16_mono(const std::string& path, const std::vector<double>& samples,
                                 double sample_rate) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("wav: cannot open " + path + " for writing");
  const std::uint32_t data_size = static_cast<std::uint32_t>(2 * samples.size());
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) f.put(static_cast<char>((v >> (8 * i)) & 0xFF));
  };
  auto u16 = [&](std::uint16_t v) {
    f.put(static_cast<char>(v & 0xFF));
    f.put(static_cast<char>(v >> 8));
  };
  f.write("RIFF", 4);
  u32(36 + data_size);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  u32(16);
  u16(1);  // PCM
  u16(1);  // mono
  u32(static_cast<std::uint32_t>(sample_rate));
  u32(static_cast<std::uint32_t>(sample_rate) * 2);
  u16(2);
  u16(16);
  f.write("data", 4);
  u32(data_size);
  for (double x : samples) {
    double scaled = std::round(std::clamp(x, -1.0, 32767.0 / 32768.0) * 32768.0);
    std::int16_t s = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    f.put(static_cast<char>(s & 0xFF));
    f.put(static_cast<char>((s >> 8) & 0xFF));
  }
  if (!f) throw std::runtime_error("wav: write failed for " + path);
}

}  // namespace nsq
