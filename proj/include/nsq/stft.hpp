#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "nsq/fft.hpp"

namespace nsq {

struct StftConfig {
  int window_len = 320;
  int hop = 160;
  int fft_len = 512;
  double sample_rate = 16000.0;
  double alpha = 0.3;  // power-law compression exponent

  int num_bins() const { return fft_len / 2 + 1; }
  double frame_rate() const { return sample_rate / static_cast<double>(hop); }
};

inline void validate(const StftConfig& c) {
  if (c.hop < 1 || c.window_len < 1 || c.fft_len < 1)
    throw std::invalid_argument("stft: window/hop/fft must be positive");
  if (c.hop > c.window_len || c.window_len > c.fft_len)
    throw std::invalid_argument("stft: need hop <= window_len <= fft_len");
  if (!is_power_of_two(c.fft_len)) throw std::invalid_argument("stft: fft_len must be a power of two");
  if (c.alpha <= 0.0) throw std::invalid_argument("stft: alpha must be > 0");
  if (c.sample_rate <= 0.0) throw std::invalid_argument("stft: sample_rate must be > 0");
}

// Periodic Hann window.
inline std::vector<double> hann_window(int len) {
  std::vector<double> w(static_cast<std::size_t>(len));
  const double pi = 3.14159265358979323846;
  for (int n = 0; n < len; ++n)
    w[static_cast<std::size_t>(n)] = 0.5 * (1.0 - std::cos(2.0 * pi * n / len));
  return w;
}

// Complex STFT tensor, F x N with F = fft_len/2 + 1 non-redundant bins.
struct Spectrogram {
  Eigen::MatrixXcd bins;
  StftConfig config;

  int num_bins() const { return static_cast<int>(bins.rows()); }
  int num_frames() const { return static_cast<int>(bins.cols()); }
};

// Hann-windowed frames at the configured hop, zero-padded to fft_len,
// one-sided transform. Frame count N = 1 + floor((len - window_len) / hop).
inline Spectrogram stft(const std::vector<double>& signal, const StftConfig& config) {
  validate(config);
  const int len = static_cast<int>(signal.size());
  if (len < config.window_len) throw std::invalid_argument("stft: signal shorter than window");
  const int frames = 1 + (len - config.window_len) / config.hop;
  const std::vector<double> window = hann_window(config.window_len);
  Spectrogram spec;
  spec.config = config;
  spec.bins.resize(config.num_bins(), frames);
  std::vector<double> frame(static_cast<std::size_t>(config.fft_len), 0.0);
  for (int m = 0; m < frames; ++m) {
    const int start = m * config.hop;
    for (int n = 0; n < config.window_len; ++n)
      frame[static_cast<std::size_t>(n)] =
          signal[static_cast<std::size_t>(start + n)] * window[static_cast<std::size_t>(n)];
    std::fill(frame.begin() + config.window_len, frame.end(), 0.0);
    std::vector<std::complex<double>> half = rfft(frame);
    for (int k = 0; k < config.num_bins(); ++k) spec.bins(k, m) = half[static_cast<std::size_t>(k)];
  }
  return spec;
}

// Weighted overlap-add synthesis with the same Hann window, normalized by the
// per-sample sum of squared windows. Interior samples reconstruct exactly.
inline std::vector<double> istft(const Spectrogram& spec, const StftConfig& config) {
  validate(config);
  if (spec.num_bins() != config.num_bins())
    throw std::invalid_argument("istft: spectrogram shape inconsistent with config");
  const int frames = spec.num_frames();
  if (frames < 1) throw std::invalid_argument("istft: empty spectrogram");
  const int out_len = (frames - 1) * config.hop + config.window_len;
  const std::vector<double> window = hann_window(config.window_len);
  std::vector<double> out(static_cast<std::size_t>(out_len), 0.0);
  std::vector<double> norm(static_cast<std::size_t>(out_len), 0.0);
  std::vector<std::complex<double>> half(static_cast<std::size_t>(config.num_bins()));
  for (int m = 0; m < frames; ++m) {
    for (int k = 0; k < config.num_bins(); ++k) half[static_cast<std::size_t>(k)] = spec.bins(k, m);
    std::vector<double> frame = irfft(half, config.fft_len);
    const int start = m * config.hop;
    for (int n = 0; n < config.window_len; ++n) {
      const double w = window[static_cast<std::size_t>(n)];
      out[static_cast<std::size_t>(start + n)] += w * frame[static_cast<std::size_t>(n)];
      norm[static_cast<std::size_t>(start + n)] += w * w;
    }
  }
  for (int i = 0; i < out_len; ++i) {
    double d = norm[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] = d > 1e-12 ? out[static_cast<std::size_t>(i)] / d : 0.0;
  }
  return out;
}

// |X|^alpha * exp(j*angle(X)): magnitude exponentiation, phase untouched.
inline Spectrogram compress(Spectrogram spec, double alpha) {
  if (alpha <= 0.0) throw std::invalid_argument("compress: alpha must be > 0");
  for (int m = 0; m < spec.num_frames(); ++m)
    for (int k = 0; k < spec.num_bins(); ++k) {
      std::complex<double> c = spec.bins(k, m);
      double mag = std::abs(c);
      spec.bins(k, m) = mag > 0.0 ? c * (std::pow(mag, alpha) / mag) : std::complex<double>(0.0);
    }
  return spec;
}

inline Spectrogram expand(Spectrogram spec, double alpha) {
  if (alpha <= 0.0) throw std::invalid_argument("expand: alpha must be > 0");
  return compress(std::move(spec), 1.0 / alpha);
}

// Real and imaginary parts stacked along the frequency axis: rows 0..F-1 hold
// the real parts, rows F..2F-1 the imaginary parts.
inline Eigen::MatrixXd stack_reim(const Spectrogram& spec) {
  const int f = spec.num_bins();
  Eigen::MatrixXd out(2 * f, spec.num_frames());
  out.topRows(f) = spec.bins.real();
  out.bottomRows(f) = spec.bins.imag();
  return out;
}

inline Spectrogram unstack_reim(const Eigen::MatrixXd& stacked, const StftConfig& config) {
  validate(config);
  const int f = config.num_bins();
  if (stacked.rows() != 2 * f)
    throw std::invalid_argument("unstack_reim: row count != 2 * num_bins");
  Spectrogram spec;
  spec.config = config;
  spec.bins.resize(f, stacked.cols());
  spec.bins.real() = stacked.topRows(f);
  spec.bins.imag() = stacked.bottomRows(f);
  return spec;
}

}  // namespace nsq
