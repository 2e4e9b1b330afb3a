#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nsq {

// Constant-bitrate framing. Packet layout (all multi-byte fields little-endian):
//
//   offset 0        magic "NSQ1" (4 bytes)
//   offset 4        version, u8 = 1
//   offset 5        dims Q, u16
//   offset 7        radices, Q x u16 (levels per dimension, each in [2, 65535])
//   offset 7+2Q     frame count, u32
//   offset 11+2Q    bits per frame B, u16
//   offset 13+2Q    bitrate in bits/s, f64
//   offset 21+2Q    frame duration in s, f64
//   offset 29+2Q    payload, ceil(frames*B/8) bytes
//
// Each frame is one mixed-radix value v = sum_q k_q * prod_{q'>q} r_q' written
// MSB-first in exactly B bits (leading bits zero when prod r < 2^B); the tail
// of the last payload byte is zero-padded. Indices are 0-based within their
// radix. B must equal floor(bitrate * duration), which parse re-checks so that
// bit corruption of the structural fields is caught without a checksum.
// Mixed-radix frames are limited to B <= 127 (128-bit accumulator); when every
// radix is a power of two any B works since dimensions pack independently.

enum class BitstreamErrorCode {
  bad_magic,
  bad_version,
  bad_shape,
  truncated,
  index_out_of_radix,
  budget_invalid,
};

class BitstreamError : public std::runtime_error {
 public:
  BitstreamError(BitstreamErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  BitstreamErrorCode code() const { return code_; }

 private:
  BitstreamErrorCode code_;
};

inline int bits_per_frame(double bitrate_bps, double frame_duration_s) {
  if (bitrate_bps <= 0.0 || frame_duration_s <= 0.0)
    throw std::invalid_argument("bits_per_frame: arguments must be positive");
  // The tiny offset undoes decimal-literal rounding (e.g. 1500 * 0.02).
  return static_cast<int>(std::floor(bitrate_bps * frame_duration_s + 1e-9));
}

// Splits the frame budget as evenly as possible: floor(B/Q) bits per dim with
// the remainder going to the first B mod Q dims. Returns the per-dim radices.
inline std::vector<int> allocate(int bits_per_frame, int dims) {
  if (dims < 1) throw std::invalid_argument("allocate: dims must be >= 1");
  if (bits_per_frame < dims)
    throw std::invalid_argument("allocate: budget below 1 bit per dimension");
  const int base = bits_per_frame / dims;
  const int extra = bits_per_frame % dims;
  if (base + 1 > 16) throw std::invalid_argument("allocate: more than 16 bits per dimension");
  std::vector<int> radices(static_cast<std::size_t>(dims));
  for (int q = 0; q < dims; ++q) radices[static_cast<std::size_t>(q)] = 1 << (base + (q < extra ? 1 : 0));
  return radices;
}

struct BitBudget {
  double bitrate_bps = 0.0;
  double frame_duration_s = 0.0;
  int bits_per_frame = 0;
  int dims = 0;
  std::vector<int> radices;
};

inline void validate_budget(const BitBudget& b) {
  if (b.dims < 1 || static_cast<int>(b.radices.size()) != b.dims)
    throw BitstreamError(BitstreamErrorCode::bad_shape, "bitstream: dims/radices mismatch");
  if (b.bits_per_frame < 1 || b.bits_per_frame > 65535)
    throw BitstreamError(BitstreamErrorCode::budget_invalid, "bitstream: bits_per_frame out of range");
  if (b.bits_per_frame != bits_per_frame(b.bitrate_bps, b.frame_duration_s))
    throw BitstreamError(BitstreamErrorCode::budget_invalid,
                         "bitstream: bits_per_frame inconsistent with bitrate * duration");
  bool all_pow2 = true;
  for (int r : b.radices) {
    if (r < 2 || r > 65535)
      throw BitstreamError(BitstreamErrorCode::bad_shape, "bitstream: radix outside [2, 65535]");
    if ((r & (r - 1)) != 0) all_pow2 = false;
  }
  if (all_pow2) {
    int total_bits = 0;
    for (int r : b.radices) {
      int bits = 0;
      while ((1 << bits) < r) ++bits;
      total_bits += bits;
    }
    if (total_bits > b.bits_per_frame)
      throw BitstreamError(BitstreamErrorCode::budget_invalid,
                           "bitstream: radix product exceeds frame budget");
  } else {
    if (b.bits_per_frame > 127)
      throw BitstreamError(BitstreamErrorCode::budget_invalid,
                           "bitstream: mixed-radix frames limited to 127 bits");
    unsigned __int128 product = 1;
    for (int r : b.radices) {
      product *= static_cast<unsigned>(r);
      if (product >> 127)
        throw BitstreamError(BitstreamErrorCode::budget_invalid,
                             "bitstream: radix product exceeds frame budget");
    }
    unsigned __int128 capacity = static_cast<unsigned __int128>(1) << b.bits_per_frame;
    if (product > capacity)
      throw BitstreamError(BitstreamErrorCode::budget_invalid,
                           "bitstream: radix product exceeds frame budget");
  }
}

inline BitBudget make_budget(double bitrate_bps, double frame_duration_s, int dims) {
  BitBudget b;
  b.bitrate_bps = bitrate_bps;
  b.frame_duration_s = frame_duration_s;
  b.bits_per_frame = bits_per_frame(bitrate_bps, frame_duration_s);
  b.dims = dims;
  b.radices = allocate(b.bits_per_frame, dims);
  validate_budget(b);
  return b;
}

struct BitstreamPacket {
  BitBudget budget;
  std::uint32_t frame_count = 0;
  std::vector<std::uint8_t> payload;
};

namespace detail {

class BitWriter {
 public:
  void write_bits(unsigned __int128 value, int nbits) {
    for (int i = nbits - 1; i >= 0; --i) push_bit(static_cast<int>((value >> i) & 1));
  }
  std::vector<std::uint8_t> finish() {
    while (bit_pos_ != 0) push_bit(0);
    return std::move(bytes_);
  }

 private:
  void push_bit(int bit) {
    if (bit_pos_ == 0) bytes_.push_back(0);
    if (bit) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> bit_pos_);
    bit_pos_ = (bit_pos_ + 1) & 7;
  }
  std::vector<std::uint8_t> bytes_;
  int bit_pos_ = 0;
};

class BitReader {
 public:
  BitReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}
  unsigned __int128 read_bits(int nbits) {
    unsigned __int128 v = 0;
    for (int i = 0; i < nbits; ++i) {
      if (pos_ >= 8 * bytes_.size())
        throw BitstreamError(BitstreamErrorCode::truncated, "bitstream: truncated payload");
      int bit = (bytes_[pos_ / 8] >> (7 - (pos_ & 7))) & 1;
      v = (v << 1) | static_cast<unsigned>(bit);
      ++pos_;
    }
    return v;
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

namespace detail {

inline bool all_power_of_two(const std::vector<int>& radices) {
  for (int r : radices)
    if ((r & (r - 1)) != 0) return false;
  return true;
}

inline int log2_exact(int r) {
  int bits = 0;
  while ((1 << bits) < r) ++bits;
  return bits;
}

}  // namespace detail

// Packs one IndexVector per frame (0-based indices) into a constant-bitrate
// payload: every frame consumes exactly budget.bits_per_frame bits. Power-of-
// two radices are written dimension by dimension; mixed radices go through one
// positional value per frame. Both produce the same bit layout.
inline BitstreamPacket pack(const std::vector<std::vector<int>>& frames, const BitBudget& budget) {
  validate_budget(budget);
  const bool pow2 = detail::all_power_of_two(budget.radices);
  detail::BitWriter writer;
  for (const std::vector<int>& frame : frames) {
    if (static_cast<int>(frame.size()) != budget.dims)
      throw BitstreamError(BitstreamErrorCode::bad_shape, "pack: frame length != dims");
    for (int q = 0; q < budget.dims; ++q) {
      int idx = frame[static_cast<std::size_t>(q)];
      int radix = budget.radices[static_cast<std::size_t>(q)];
      if (idx < 0 || idx >= radix)
        throw BitstreamError(BitstreamErrorCode::index_out_of_radix, "pack: index outside radix");
    }
    if (pow2) {
      int used = 0;
      for (int r : budget.radices) used += detail::log2_exact(r);
      writer.write_bits(0, budget.bits_per_frame - used);  // slack padding first
      for (int q = 0; q < budget.dims; ++q)
        writer.write_bits(static_cast<unsigned>(frame[static_cast<std::size_t>(q)]),
                          detail::log2_exact(budget.radices[static_cast<std::size_t>(q)]));
    } else {
      unsigned __int128 value = 0;
      for (int q = 0; q < budget.dims; ++q)
        value = value * static_cast<unsigned>(budget.radices[static_cast<std::size_t>(q)]) +
                static_cast<unsigned>(frame[static_cast<std::size_t>(q)]);
      writer.write_bits(value, budget.bits_per_frame);
    }
  }
  BitstreamPacket packet;
  packet.budget = budget;
  packet.frame_count = static_cast<std::uint32_t>(frames.size());
  packet.payload = writer.finish();
  return packet;
}

inline std::vector<std::vector<int>> unpack(const BitstreamPacket& packet) {
  validate_budget(packet.budget);
  const BitBudget& budget = packet.budget;
  const std::size_t expected =
      (static_cast<std::size_t>(packet.frame_count) * static_cast<std::size_t>(budget.bits_per_frame) + 7) / 8;
  if (packet.payload.size() != expected)
    throw BitstreamError(BitstreamErrorCode::truncated, "unpack: payload size mismatch");
  const bool pow2 = detail::all_power_of_two(budget.radices);
  detail::BitReader reader(packet.payload);
  unsigned __int128 product = 1;
  if (!pow2)
    for (int r : budget.radices) product *= static_cast<unsigned>(r);
  std::vector<std::vector<int>> frames(packet.frame_count);
  for (std::uint32_t f = 0; f < packet.frame_count; ++f) {
    std::vector<int> frame(static_cast<std::size_t>(budget.dims));
    if (pow2) {
      int used = 0;
      for (int r : budget.radices) used += detail::log2_exact(r);
      for (int i = 0; i < budget.bits_per_frame - used; ++i)
        if (reader.read_bits(1) != 0)
          throw BitstreamError(BitstreamErrorCode::index_out_of_radix,
                               "unpack: nonzero slack bits in frame");
      for (int q = 0; q < budget.dims; ++q)
        frame[static_cast<std::size_t>(q)] = static_cast<int>(
            reader.read_bits(detail::log2_exact(budget.radices[static_cast<std::size_t>(q)])));
    } else {
      unsigned __int128 value = reader.read_bits(budget.bits_per_frame);
      if (value >= product)
        throw BitstreamError(BitstreamErrorCode::index_out_of_radix,
                             "unpack: frame value outside radix product");
      for (int q = budget.dims - 1; q >= 0; --q) {
        unsigned radix = static_cast<unsigned>(budget.radices[static_cast<std::size_t>(q)]);
        frame[static_cast<std::size_t>(q)] = static_cast<int>(value % radix);
        value /= radix;
      }
    }
    frames[f] = std::move(frame);
  }
  return frames;
}

namespace detail {

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

inline void put_f64(std::vector<std::uint8_t>& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xFF));
}

struct ByteCursor {
  const std::vector<std::uint8_t>& data;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > data.size())
      throw BitstreamError(BitstreamErrorCode::truncated, "parse: truncated header");
  }
  std::uint8_t u8() {
    need(1);
    return data[pos++];
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(data[pos] | (data[pos + 1] << 8));
    pos += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data[pos + static_cast<std::size_t>(i)]) << (8 * i);
    pos += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(data[pos + static_cast<std::size_t>(i)]) << (8 * i);
    pos += 8;
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
};

}  // namespace detail

inline std::vector<std::uint8_t> serialize(const BitstreamPacket& packet) {
  validate_budget(packet.budget);
  std::vector<std::uint8_t> out;
  out.insert(out.end(), {'N', 'S', 'Q', '1'});
  out.push_back(1);  // version
  detail::put_u16(out, static_cast<std::uint16_t>(packet.budget.dims));
  for (int r : packet.budget.radices) detail::put_u16(out, static_cast<std::uint16_t>(r));
  detail::put_u32(out, packet.frame_count);
  detail::put_u16(out, static_cast<std::uint16_t>(packet.budget.bits_per_frame));
  detail::put_f64(out, packet.budget.bitrate_bps);
  detail::put_f64(out, packet.budget.frame_duration_s);
  out.insert(out.end(), packet.payload.begin(), packet.payload.end());
  return out;
}

inline BitstreamPacket parse(const std::vector<std::uint8_t>& bytes) {
  detail::ByteCursor cur{bytes};
  cur.need(4);
  if (std::memcmp(bytes.data(), "NSQ1", 4) != 0)
    throw BitstreamError(BitstreamErrorCode::bad_magic, "parse: bad magic");
  cur.pos = 4;
  if (cur.u8() != 1) throw BitstreamError(BitstreamErrorCode::bad_version, "parse: unsupported version");
  BitstreamPacket packet;
  packet.budget.dims = cur.u16();
  if (packet.budget.dims < 1)
    throw BitstreamError(BitstreamErrorCode::bad_shape, "parse: dims must be >= 1");
  packet.budget.radices.resize(static_cast<std::size_t>(packet.budget.dims));
  for (int q = 0; q < packet.budget.dims; ++q)
    packet.budget.radices[static_cast<std::size_t>(q)] = cur.u16();
  packet.frame_count = cur.u32();
  packet.budget.bits_per_frame = cur.u16();
  packet.budget.bitrate_bps = cur.f64();
  packet.budget.frame_duration_s = cur.f64();
  validate_budget(packet.budget);
  const std::size_t expected =
      (static_cast<std::size_t>(packet.frame_count) * static_cast<std::size_t>(packet.budget.bits_per_frame) + 7) / 8;
  if (bytes.size() - cur.pos != expected)
    throw BitstreamError(BitstreamErrorCode::truncated, "parse: payload size mismatch");
  packet.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(cur.pos), bytes.end());
  return packet;
}

inline void write_packet_file(const std::string& path, const BitstreamPacket& packet) {
  std::vector<std::uint8_t> bytes = serialize(packet);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_packet_file: cannot open " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write_packet_file: write failed for " + path);
}

inline BitstreamPacket read_packet_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_packet_file: cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return parse(bytes);
}

}  // namespace nsq
