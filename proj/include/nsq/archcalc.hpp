#pragma once

#include <cmath>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nsq {

enum class BlockKind { conv1d, conv1d_channelwise, linear, gru, conv_transpose };

struct BlockCost {
  double params = 0.0;
  double macs_per_s = 0.0;
};

// Standard layer cost formulas, biases included:
//   conv1d            params = in*out*K + out,   macs/s = in*out*K * frames
//   channelwise conv  params = C*K + C (in==out==C), macs/s = C*K * frames
//   linear            params = in*out + out,     macs/s = in*out * frames
//   gru               params = 3*(h^2 + h*in + h), macs/s = 3*(h^2 + h*in) * frames
//   conv_transpose    params = in*out*K + out,   macs/s = in*out*K * frames (input rate)
inline BlockCost count_block(BlockKind kind, int in_ch, int out_ch, int kernel,
                             double frames_per_s) {
  if (in_ch < 1 || out_ch < 1 || kernel < 1 || frames_per_s <= 0.0)
    throw std::invalid_argument("count_block: dimensions must be positive");
  const double in = in_ch, out = out_ch, k = kernel;
  BlockCost c;
  switch (kind) {
    case BlockKind::conv1d:
    case BlockKind::conv_transpose:
      c.params = in * out * k + out;
      c.macs_per_s = in * out * k * frames_per_s;
      break;
    case BlockKind::conv1d_channelwise:
      if (in_ch != out_ch)
        throw std::invalid_argument("count_block: channelwise conv needs in_ch == out_ch");
      c.params = in * k + in;
      c.macs_per_s = in * k * frames_per_s;
      break;
    case BlockKind::linear:
      c.params = in * out + out;
      c.macs_per_s = in * out * frames_per_s;
      break;
    case BlockKind::gru:
      c.params = 3.0 * (out * out + out * in + out);
      c.macs_per_s = 3.0 * (out * out + out * in) * frames_per_s;
      break;
    default:
      throw std::invalid_argument("count_block: unknown kind");
  }
  return c;
}

// Model configuration following the published table of per-block kernel
// sizes, channel counts and strides, plus the ablation toggles. Where the
// published description leaves layer hyperparameters open, the fields below
// carry documented guesses:
//   * ConvBlock expansion width = 2x the ConvBlock input channels,
//   * GRU hidden size = block channels,
//   * two TADEResBlocks conditioned on intermediate encoder outputs,
//   * decoder TADE conditioning on the post-unprojection latent (bottleneck
//     width), and a synthesis conv mirroring the first analysis conv.
// Absolute totals are therefore calibration, the variant ordering is not.
struct ArchConfig {
  std::vector<int> kernel = {7, 5, 5, 5, 3, 3};
  std::vector<int> channels = {256, 128, 64, 64, 32, 32};
  std::vector<int> strides = {1, 1, 1, 1, 1, 2};
  double sample_rate = 16000.0;
  int hop = 160;
  int fft_len = 512;
  int latent_dims = 15;     // Q after the projection
  int num_taderes = 2;      // encoder-side skip/styling blocks
  int tade_kernel = 3;
  bool use_dpcrnn = true;
  bool use_skips = true;    // TADEResBlocks on the encoder side
  bool use_styling = true;  // TADE layers inside the decoder blocks

  int num_blocks() const { return static_cast<int>(channels.size()); }
};

inline void validate(const ArchConfig& c) {
  if (c.channels.empty()) throw std::invalid_argument("archcalc: need at least one block");
  if (c.kernel.size() != c.channels.size() || c.strides.size() != c.channels.size())
    throw std::invalid_argument("archcalc: kernel/channels/strides lengths differ");
  for (std::size_t i = 0; i < c.channels.size(); ++i)
    if (c.kernel[i] < 1 || c.channels[i] < 1 || c.strides[i] < 1)
      throw std::invalid_argument("archcalc: table entries must be positive");
  if (c.hop < 1 || c.fft_len < 2 || c.sample_rate <= 0.0)
    throw std::invalid_argument("archcalc: invalid frontend settings");
  if (c.latent_dims < 1 || c.num_taderes < 0 || c.tade_kernel < 1)
    throw std::invalid_argument("archcalc: invalid latent/tade settings");
}

struct ComplexityReport {
  struct Entry {
    std::string name;
    double params = 0.0;
    double macs_per_s = 0.0;
  };
  std::vector<Entry> blocks;
  double total_params = 0.0;
  double total_macs_per_s = 0.0;
};

namespace detail {

struct CostAccum {
  ComplexityReport* report;
  std::string prefix;
  double params = 0.0;
  double macs = 0.0;

  void add(const BlockCost& c) {
    params += c.params;
    macs += c.macs_per_s;
  }
  void norm_affine(int ch, double rate) {  // ChannelNorm / BN affine pair
    params += 2.0 * ch;
    macs += static_cast<double>(ch) * rate;
  }
  void commit() {
    report->blocks.push_back({prefix, params, macs});
    report->total_params += params;
    report->total_macs_per_s += macs;
  }
};

// ConvBlock: GELU, channelwise conv K, ChannelNorm, 1x1 up to 2*cin, GELU,
// 1x1 down to cout (BN only on the decoder side).
inline void conv_block(CostAccum& acc, int cin, int cout, int kernel, double rate, bool bn) {
  if (bn) acc.norm_affine(cin, rate);
  acc.add(count_block(BlockKind::conv1d_channelwise, cin, cin, kernel, rate));
  acc.norm_affine(cin, rate);
  const int cup = 2 * cin;
  acc.add(count_block(BlockKind::conv1d, cin, cup, 1, rate));
  acc.add(count_block(BlockKind::conv1d, cup, cout, 1, rate));
}

// TADE: conv K on the conditioning signal, then one conv K each for the
// feature-wise scale and shift.
inline void tade(CostAccum& acc, int ch, int cond_ch, int kernel, double rate) {
  acc.add(count_block(BlockKind::conv1d, cond_ch, ch, kernel, rate));
  acc.add(count_block(BlockKind::conv1d, ch, ch, kernel, rate));
  acc.add(count_block(BlockKind::conv1d, ch, ch, kernel, rate));
  acc.macs += 2.0 * ch * rate;  // modulation multiply-add
}

// TADEResBlock: two TADE stages, each followed by a tanh/softmax gated pair
// of conv K layers.
inline void tade_res_block(CostAccum& acc, int ch, int cond_ch, int kernel, double rate) {
  for (int stage = 0; stage < 2; ++stage) {
    tade(acc, ch, cond_ch, kernel, rate);
    acc.add(count_block(BlockKind::conv1d, ch, ch, kernel, rate));
    acc.add(count_block(BlockKind::conv1d, ch, ch, kernel, rate));
    acc.macs += static_cast<double>(ch) * rate;  // gate product
  }
}

// DPCRNN: 1x1, GRU (hidden = channels), 1x1, with the surrounding norms.
inline void dpcrnn(CostAccum& acc, int ch, double rate, bool bn) {
  if (bn) acc.norm_affine(ch, rate);
  acc.add(count_block(BlockKind::conv1d, ch, ch, 1, rate));
  if (bn) acc.norm_affine(ch, rate);
  acc.add(count_block(BlockKind::gru, ch, ch, 1, rate));
  if (bn) acc.norm_affine(ch, rate);
  acc.add(count_block(BlockKind::conv1d, ch, ch, 1, rate));
}

}  // namespace detail

inline ComplexityReport estimate(const ArchConfig& config) {
  validate(config);
  ComplexityReport report;
  const int m_blocks = config.num_blocks();
  const int input_ch = 2 * (config.fft_len / 2 + 1);
  const double base_rate = config.sample_rate / static_cast<double>(config.hop);

  // Encoder: strided conv + two ConvBlocks per block, frequency axis as channels.
  double rate = base_rate;
  int ch = input_ch;
  for (int m = 0; m < m_blocks; ++m) {
    detail::CostAccum acc{&report, "enc_block_" + std::to_string(m + 1)};
    rate /= config.strides[static_cast<std::size_t>(m)];
    const int out = config.channels[static_cast<std::size_t>(m)];
    acc.add(count_block(BlockKind::conv1d, ch, out, config.kernel[static_cast<std::size_t>(m)], rate));
    detail::conv_block(acc, out, 2 * out, config.kernel[static_cast<std::size_t>(m)], rate, false);
    detail::conv_block(acc, 2 * out, out, config.kernel[static_cast<std::size_t>(m)], rate, false);
    acc.commit();
    ch = out;
  }
  const double bottleneck_rate = rate;
  const int bottleneck_ch = ch;

  if (config.use_dpcrnn) {
    detail::CostAccum acc{&report, "enc_dpcrnn"};
    detail::dpcrnn(acc, bottleneck_ch, bottleneck_rate, false);
    acc.commit();
  }
  if (config.use_skips) {
    // Conditioned on intermediate encoder outputs; channel counts taken from
    // the deepest blocks that produced them.
    for (int t = 0; t < config.num_taderes; ++t) {
      detail::CostAccum acc{&report, "enc_taderes_" + std::to_string(t + 1)};
      int cond_idx = std::max(0, m_blocks - 2 - t);
      detail::tade_res_block(acc, bottleneck_ch, config.channels[static_cast<std::size_t>(cond_idx)],
                             config.tade_kernel, bottleneck_rate);
      acc.commit();
    }
  }

  {
    detail::CostAccum acc{&report, "projection"};
    acc.add(count_block(BlockKind::conv1d, bottleneck_ch, bottleneck_ch, 3, bottleneck_rate));
    acc.add(count_block(BlockKind::linear, bottleneck_ch, config.latent_dims, 1, bottleneck_rate));
    acc.add(count_block(BlockKind::linear, config.latent_dims, bottleneck_ch, 1, bottleneck_rate));
    acc.add(count_block(BlockKind::conv1d, bottleneck_ch, bottleneck_ch, 3, bottleneck_rate));
    acc.commit();
  }

  if (config.use_dpcrnn) {
    detail::CostAccum acc{&report, "dec_dpcrnn"};
    detail::dpcrnn(acc, bottleneck_ch, bottleneck_rate, true);
    acc.commit();
  }

  // Decoder blocks m = M..2 upsample back; each is two ConvBlocks, TADE
  // styling conditioned on the latent, and a transposed conv.
  rate = bottleneck_rate;
  for (int m = m_blocks - 1; m >= 1; --m) {
    detail::CostAccum acc{&report, "dec_block_" + std::to_string(m + 1)};
    const int c_m = config.channels[static_cast<std::size_t>(m)];
    const int c_prev = config.channels[static_cast<std::size_t>(m - 1)];
    detail::conv_block(acc, c_m, 2 * c_m, config.kernel[static_cast<std::size_t>(m)], rate, true);
    detail::conv_block(acc, 2 * c_m, c_m, config.kernel[static_cast<std::size_t>(m)], rate, true);
    if (config.use_styling)
      detail::tade(acc, c_m, bottleneck_ch, config.tade_kernel, rate);
    acc.add(count_block(BlockKind::conv_transpose, c_m, c_prev,
                        config.kernel[static_cast<std::size_t>(m)], rate));
    rate *= config.strides[static_cast<std::size_t>(m)];
    acc.commit();
  }
  {
    detail::CostAccum acc{&report, "synthesis"};
    const int c1 = config.channels.front();
    detail::conv_block(acc, c1, 2 * c1, config.kernel.front(), rate, true);
    detail::conv_block(acc, 2 * c1, c1, config.kernel.front(), rate, true);
    if (config.use_styling) detail::tade(acc, c1, bottleneck_ch, config.tade_kernel, rate);
    acc.add(count_block(BlockKind::conv_transpose, c1, input_ch, config.kernel.front(), rate));
    acc.commit();
  }
  return report;
}

// Key-value text config: one "key = value" per line, lists comma-separated,
// '#' starts a comment. Unknown keys are rejected.
inline ArchConfig parse_arch_config(std::istream& in) {
  ArchConfig config;
  auto parse_list = [](const std::string& v) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    return out;
  };
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string::size_type hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string::size_type eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw std::invalid_argument("arch config line " + std::to_string(line_no) + ": expected key = value");
      continue;
    }
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t\r"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "kernel") config.kernel = parse_list(value);
      else if (key == "channels") config.channels = parse_list(value);
      else if (key == "strides") config.strides = parse_list(value);
      else if (key == "sample_rate") config.sample_rate = std::stod(value);
      else if (key == "hop") config.hop = std::stoi(value);
      else if (key == "fft_len") config.fft_len = std::stoi(value);
      else if (key == "latent_dims") config.latent_dims = std::stoi(value);
      else if (key == "num_taderes") config.num_taderes = std::stoi(value);
      else if (key == "tade_kernel") config.tade_kernel = std::stoi(value);
      else if (key == "use_dpcrnn") config.use_dpcrnn = value == "true" || value == "1";
      else if (key == "use_skips") config.use_skips = value == "true" || value == "1";
      else if (key == "use_styling") config.use_styling = value == "true" || value == "1";
      else throw std::invalid_argument("unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw std::invalid_argument("arch config line " + std::to_string(line_no) + ": bad entry '" + key + "'");
    }
  }
  validate(config);
  return config;
}

}  // namespace nsq
