#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "nsq/stft.hpp"

namespace nsq {

// Resolutions the multi-resolution reconstruction loss is evaluated at,
// given as (fft, window, hop) triples.
inline std::vector<StftConfig> default_loss_resolutions() {
  StftConfig r0;  // 512 / 320 / 160
  StftConfig r1;
  r1.fft_len = 1024;
  r1.window_len = 640;
  r1.hop = 320;
  StftConfig r2;
  r2.fft_len = 256;
  r2.window_len = 160;
  r2.hop = 80;
  return {r0, r1, r2};
}

struct RecLossTerms {
  double mse = 0.0;  // ||S - S_hat||_F / ||S||_F
  double mag = 0.0;  // sum |log|S| - log|S_hat|| with floored magnitudes
};

struct RecLossBreakdown {
  double total = 0.0;
  std::vector<RecLossTerms> per_resolution;
};

// L_rec = (1/|R|) * sum over resolutions of (L_MSE + L_mag). The log term is
// taken on magnitudes floored at log_floor.
inline RecLossBreakdown rec_loss(const std::vector<double>& x, const std::vector<double>& x_hat,
                                 const std::vector<StftConfig>& resolutions,
                                 double log_floor = 1e-7) {
  if (x.size() != x_hat.size()) throw std::invalid_argument("rec_loss: length mismatch");
  if (resolutions.empty()) throw std::invalid_argument("rec_loss: no resolutions");
  RecLossBreakdown out;
  for (const StftConfig& cfg : resolutions) {
    Spectrogram s = stft(x, cfg);
    Spectrogram s_hat = stft(x_hat, cfg);
    double ref_norm = s.bins.norm();
    if (ref_norm == 0.0) throw std::invalid_argument("rec_loss: zero reference spectrum");
    RecLossTerms terms;
    terms.mse = (s.bins - s_hat.bins).norm() / ref_norm;
    double mag = 0.0;
    for (int m = 0; m < s.num_frames(); ++m)
      for (int k = 0; k < s.num_bins(); ++k) {
        double a = std::max(std::abs(s.bins(k, m)), log_floor);
        double b = std::max(std::abs(s_hat.bins(k, m)), log_floor);
        mag += std::abs(std::log(a) - std::log(b));
      }
    terms.mag = mag;
    out.per_resolution.push_back(terms);
    out.total += terms.mse + terms.mag;
  }
  out.total /= static_cast<double>(resolutions.size());
  return out;
}

struct GanLosses {
  double generator = 0.0;
  double discriminator = 0.0;
};

// LS-GAN ensemble losses on provided scores (the discriminators themselves
// live elsewhere): L_adv = sum_k (D_k(G(x)) - 1)^2,
// L_Disc = sum_k (D_k(x) - 1)^2 + D_k(G(x))^2.
inline GanLosses lsgan_losses(const std::vector<double>& real_scores,
                              const std::vector<double>& fake_scores) {
  if (real_scores.size() != fake_scores.size())
    throw std::invalid_argument("lsgan_losses: ensemble size mismatch");
  GanLosses out;
  for (std::size_t k = 0; k < real_scores.size(); ++k) {
    double r = real_scores[k];
    double f = fake_scores[k];
    out.generator += (f - 1.0) * (f - 1.0);
    out.discriminator += (r - 1.0) * (r - 1.0) + f * f;
  }
  return out;
}

// Feature matching: (1/(K*J)) * sum_k sum_j || D_k^(j)(x) - D_k^(j)(G(x)) ||_1,1
// over K ensemble members and J intermediate representations each.
inline double feature_matching_loss(const std::vector<std::vector<std::vector<double>>>& real_feats,
                                    const std::vector<std::vector<std::vector<double>>>& fake_feats) {
  if (real_feats.size() != fake_feats.size())
    throw std::invalid_argument("feature_matching_loss: ensemble size mismatch");
  if (real_feats.empty()) throw std::invalid_argument("feature_matching_loss: empty ensemble");
  const std::size_t num_layers = real_feats.front().size();
  if (num_layers == 0) throw std::invalid_argument("feature_matching_loss: no feature layers");
  double sum = 0.0;
  for (std::size_t k = 0; k < real_feats.size(); ++k) {
    if (real_feats[k].size() != num_layers || fake_feats[k].size() != num_layers)
      throw std::invalid_argument("feature_matching_loss: layer count mismatch");
    for (std::size_t j = 0; j < num_layers; ++j) {
      if (real_feats[k][j].size() != fake_feats[k][j].size())
        throw std::invalid_argument("feature_matching_loss: feature shape mismatch");
      for (std::size_t i = 0; i < real_feats[k][j].size(); ++i)
        sum += std::abs(real_feats[k][j][i] - fake_feats[k][j][i]);
    }
  }
  return sum / (static_cast<double>(real_feats.size()) * static_cast<double>(num_layers));
}

// L_Gen = lambda_rec * L_rec + lambda_adv * L_adv + lambda_feat * L_feat.
inline double combine_gen_loss(double rec, double adv, double feat, double lambda_rec = 1.0,
                               double lambda_adv = 1.0, double lambda_feat = 10.0) {
  if (lambda_rec < 0.0 || lambda_adv < 0.0 || lambda_feat < 0.0)
    throw std::invalid_argument("combine_gen_loss: weights must be >= 0");
  return lambda_rec * rec + lambda_adv * adv + lambda_feat * feat;
}

}  // namespace nsq
