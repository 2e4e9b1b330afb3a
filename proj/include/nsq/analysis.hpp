#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "nsq/rng.hpp"

namespace nsq {

// Which units of a channels-x-frames matrix get correlated against each other.
//   channel:  Pearson coefficients between rows, measured across frames.
//   temporal: Pearson coefficients between frame columns, measured across channels.
enum class CorrAxis { temporal, channel };

struct AvgCorrResult {
  double value = 0.0;
  int excluded_units = 0;  // zero-variance rows/columns dropped from the average
};

// Average magnitude of the off-diagonal correlation coefficients, normalized
// by the number of off-diagonal pairs so the result stays in [0, 1].
inline AvgCorrResult avg_corr(const Eigen::MatrixXd& seq, CorrAxis axis) {
  if (seq.rows() < 2 || seq.cols() < 2)
    throw std::invalid_argument("avg_corr: need at least 2 rows and 2 columns");
  if (!seq.allFinite()) throw std::invalid_argument("avg_corr: non-finite input");
  Eigen::MatrixXd m = axis == CorrAxis::channel ? seq : Eigen::MatrixXd(seq.transpose());
  const Eigen::Index units = m.rows();
  const Eigen::Index obs = m.cols();
  Eigen::MatrixXd centered = m.colwise() - m.rowwise().mean();
  Eigen::MatrixXd scatter = centered * centered.transpose() / static_cast<double>(obs - 1);
  std::vector<bool> valid(static_cast<std::size_t>(units));
  int excluded = 0;
  for (Eigen::Index i = 0; i < units; ++i) {
    valid[static_cast<std::size_t>(i)] = scatter(i, i) > 0.0;
    if (!valid[static_cast<std::size_t>(i)]) ++excluded;
  }
  double sum = 0.0;
  long pairs = 0;
  for (Eigen::Index i = 0; i < units; ++i) {
    if (!valid[static_cast<std::size_t>(i)]) continue;
    for (Eigen::Index j = 0; j < units; ++j) {
      if (i == j || !valid[static_cast<std::size_t>(j)]) continue;
      sum += std::abs(scatter(i, j) / std::sqrt(scatter(i, i) * scatter(j, j)));
      ++pairs;
    }
  }
  if (pairs == 0) throw std::invalid_argument("avg_corr: all units have zero variance");
  return AvgCorrResult{sum / static_cast<double>(pairs), excluded};
}

struct CorrelationReport {
  double rho_temporal = 0.0;
  double rho_channel = 0.0;
};

inline CorrelationReport correlation_report(const Eigen::MatrixXd& seq) {
  return CorrelationReport{avg_corr(seq, CorrAxis::temporal).value,
                           avg_corr(seq, CorrAxis::channel).value};
}

struct TikhonovResult {
  double mc = 0.0;        // Monte-Carlo estimate of E||D(Ez + n) - z||^2
  double analytic = 0.0;  // ||DE - I||_F^2 + (delta^2/12) ||D||_F^2
  double rel_gap = 0.0;
};

// Checks the noise-as-regularizer identity for a linear autoencoder: encoder
// enc (Q x d), decoder dec (d x Q), z standard normal, n uniform on
// [-delta/2, delta/2)^Q.
inline TikhonovResult tikhonov_check(const Eigen::MatrixXd& enc, const Eigen::MatrixXd& dec,
                                     double delta, long n_samples, std::uint64_t seed) {
  if (enc.rows() != dec.cols() || enc.cols() != dec.rows())
    throw std::invalid_argument("tikhonov_check: encoder/decoder shapes inconsistent");
  if (n_samples < 1) throw std::invalid_argument("tikhonov_check: n_samples must be >= 1");
  if (delta <= 0.0) throw std::invalid_argument("tikhonov_check: delta must be > 0");
  const Eigen::Index d = enc.cols();
  const Eigen::Index q = enc.rows();
  const double sigma2 = delta * delta / 12.0;
  Eigen::MatrixXd residual_map = dec * enc - Eigen::MatrixXd::Identity(d, d);
  TikhonovResult out;
  out.analytic = residual_map.squaredNorm() + sigma2 * dec.squaredNorm();
  SplitMix64 rng(seed);
  double acc = 0.0;
  Eigen::VectorXd z(d), noise(q);
  for (long s = 0; s < n_samples; ++s) {
    for (Eigen::Index i = 0; i < d; ++i) z[i] = rng.normal();
    for (Eigen::Index i = 0; i < q; ++i) noise[i] = delta * (rng.uniform() - 0.5);
    acc += (dec * (enc * z + noise) - z).squaredNorm();
  }
  out.mc = acc / static_cast<double>(n_samples);
  out.rel_gap = out.analytic != 0.0 ? std::abs(out.mc - out.analytic) / std::abs(out.analytic)
                                    : std::abs(out.mc);
  return out;
}

// KL divergence of a uniform quantization cell of side delta against the
// uniform prior on [-1,1]^dims: dims * log(2/delta), independent of where the
// cell sits.
inline double uniform_kl(double delta, int dims) {
  if (dims < 1) throw std::invalid_argument("uniform_kl: dims must be >= 1");
  if (delta <= 0.0 || delta > 2.0) throw std::invalid_argument("uniform_kl: need 0 < delta <= 2");
  return static_cast<double>(dims) * std::log(2.0 / delta);
}

struct KsResult {
  double statistic = 0.0;
  double critical = 0.0;
  bool pass = false;
};

// Two-sample Kolmogorov-Smirnov with the asymptotic critical value
// c(alpha) * sqrt((n+m)/(n*m)), c(alpha) = sqrt(-ln(alpha/2)/2).
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b, double alpha = 0.01) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  if (alpha <= 0.0 || alpha >= 1.0) throw std::invalid_argument("ks_two_sample: alpha in (0,1)");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::size_t n = a.size(), m = b.size();
  double stat = 0.0;
  std::size_t i = 0, j = 0;
  while (i < n && j < m) {
    double x = std::min(a[i], b[j]);
    while (i < n && a[i] <= x) ++i;
    while (j < m && b[j] <= x) ++j;
    double fa = static_cast<double>(i) / static_cast<double>(n);
    double fb = static_cast<double>(j) / static_cast<double>(m);
    stat = std::max(stat, std::abs(fa - fb));
  }
  KsResult out;
  out.statistic = stat;
  double c = std::sqrt(-std::log(alpha / 2.0) / 2.0);
  out.critical = c * std::sqrt(static_cast<double>(n + m) / (static_cast<double>(n) * static_cast<double>(m)));
  out.pass = stat <= out.critical;
  return out;
}

// 10*log10(||x||^2 / ||x - x_hat||^2); identical signals report +infinity.
inline double quant_snr(const std::vector<double>& reference, const std::vector<double>& degraded) {
  if (reference.size() != degraded.size()) throw std::invalid_argument("quant_snr: length mismatch");
  double sig = 0.0, err = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    sig += reference[i] * reference[i];
    double e = reference[i] - degraded[i];
    err += e * e;
  }
  if (sig == 0.0) throw std::invalid_argument("quant_snr: zero reference signal");
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(sig / err);
}

}  // namespace nsq
