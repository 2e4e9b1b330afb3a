#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "nsq/mlp.hpp"
#include "nsq/quantizer.hpp"
#include "nsq/rng.hpp"

namespace nsq {

enum class QuantMode { straight_through, noise };

struct TrainConfig {
  QuantMode mode = QuantMode::straight_through;
  QuantizerGrid grid;
  double learning_rate = 0.05;
  int steps = 20000;
  int batch_size = 256;
  std::uint64_t seed = 1;
  int hidden = 32;
  int history_stride = 200;
};

inline void validate(const TrainConfig& c) {
  if (c.learning_rate <= 0.0) throw std::invalid_argument("train: learning_rate must be > 0");
  if (c.steps < 0) throw std::invalid_argument("train: steps must be >= 0");
  if (c.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (c.hidden < 1) throw std::invalid_argument("train: hidden width must be >= 1");
  if (c.history_stride < 1) throw std::invalid_argument("train: history_stride must be >= 1");
}

struct TwoMoonsSet {
  Eigen::MatrixXd points;  // N x 2, inside [-1,1]^2
  int n = 0;
  double noise_std = 0.0;
  std::uint64_t seed = 0;
};

// Two interleaved half-circles of radius 1 (the second one reflected and
// shifted by (1, 0.5)), jittered with Gaussian noise, then mapped by a fixed
// affine transform into [-1,1]^2 and clamped.
inline TwoMoonsSet two_moons(int n, double noise_std, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("two_moons: n must be >= 1");
  if (noise_std < 0.0) throw std::invalid_argument("two_moons: noise_std must be >= 0");
  TwoMoonsSet set;
  set.n = n;
  set.noise_std = noise_std;
  set.seed = seed;
  set.points.resize(n, 2);
  SplitMix64 rng(seed);
  const double pi = 3.14159265358979323846;
  const int n1 = (n + 1) / 2;
  const int n2 = n - n1;
  auto emplace = [&](int row, double x, double y) {
    x += noise_std * rng.normal();
    y += noise_std * rng.normal();
    double sx = (x - 0.5) / 1.5;
    double sy = (y - 0.25) / 0.75;
    set.points(row, 0) = std::clamp(sx, -1.0, 1.0);
    set.points(row, 1) = std::clamp(sy, -1.0, 1.0);
  };
  for (int i = 0; i < n1; ++i) {
    double t = n1 > 1 ? pi * i / (n1 - 1) : 0.0;
    emplace(i, std::cos(t), std::sin(t));
  }
  for (int i = 0; i < n2; ++i) {
    double t = n2 > 1 ? pi * i / (n2 - 1) : 0.0;
    emplace(n1 + i, 1.0 - std::cos(t), 0.5 - std::sin(t));
  }
  return set;
}

// Encoder 2 -> hidden -> hidden -> Q (all tanh, so the quantizer precondition
// holds by construction), decoder mirrored with a linear output layer.
struct ToyModel {
  MlpNetwork encoder;
  MlpNetwork decoder;
  QuantizerGrid grid;
};

inline ToyModel make_toy_model(const QuantizerGrid& grid, int hidden, std::uint64_t seed) {
  ToyModel model;
  model.grid = grid;
  model.encoder = make_mlp({2, hidden, hidden, grid.dims},
                           {Activation::tanh, Activation::tanh, Activation::tanh},
                           derive_seed(seed, 0));
  model.decoder = make_mlp({grid.dims, hidden, hidden, 2},
                           {Activation::tanh, Activation::tanh, Activation::identity},
                           derive_seed(seed, 1));
  return model;
}

inline double mse(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).squaredNorm() / static_cast<double>(a.size());
}

struct PsqCache {
  MlpCache encoder;
  MlpCache decoder;
  Eigen::MatrixXd bottleneck_in;   // encoder output z
  Eigen::MatrixXd bottleneck_out;  // quantized / noised z fed to the decoder
};

// Training-path forward. In noise mode the surrogate noise must be supplied
// (so gradient checks can freeze it); in ST mode `noise` is ignored.
inline Eigen::MatrixXd psq_forward_train(const ToyModel& model, const Eigen::MatrixXd& x,
                                         QuantMode mode, const Eigen::MatrixXd& noise,
                                         PsqCache& cache) {
  cache.bottleneck_in = mlp_forward(model.encoder, x, &cache.encoder);
  if (mode == QuantMode::noise) {
    if (noise.rows() != cache.bottleneck_in.rows() || noise.cols() != cache.bottleneck_in.cols())
      throw std::invalid_argument("psq_forward_train: noise shape mismatch");
    cache.bottleneck_out = cache.bottleneck_in + noise;
  } else {
    cache.bottleneck_out = cache.bottleneck_in;
    for (Eigen::Index c = 0; c < cache.bottleneck_out.cols(); ++c)
      cache.bottleneck_out.col(c) = st_apply(model.grid, cache.bottleneck_in.col(c)).value;
  }
  return mlp_forward(model.decoder, cache.bottleneck_out, &cache.decoder);
}

// Inference path: hard quantization regardless of how the model was trained.
inline Eigen::MatrixXd psq_forward_eval(const ToyModel& model, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd z = mlp_forward(model.encoder, x);
  for (Eigen::Index c = 0; c < z.cols(); ++c)
    z.col(c) = dequantize(model.grid, quantize(model.grid, z.col(c)));
  return mlp_forward(model.decoder, z);
}

inline Eigen::MatrixXd draw_surrogate_noise(const QuantizerGrid& grid, Eigen::Index cols,
                                            SplitMix64& rng) {
  Eigen::MatrixXd noise(grid.dims, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (int q = 0; q < grid.dims; ++q) noise(q, c) = grid.step * (rng.uniform() - 0.5);
  return noise;
}

struct PsqGrads {
  MlpGrads encoder;
  MlpGrads decoder;
  double mse = 0.0;
};

// Mean squared reconstruction error, gradients by manual chain rule. The
// quantizer block backpropagates as identity: exactly (noise mode, the noise
// is a constant under the reparameterization) or by contract (ST mode).
inline PsqGrads psq_backward(const ToyModel& model, const Eigen::MatrixXd& batch, QuantMode mode,
                             const Eigen::MatrixXd& noise) {
  PsqCache cache;
  Eigen::MatrixXd x_hat = psq_forward_train(model, batch, mode, noise, cache);
  PsqGrads grads;
  grads.mse = mse(x_hat, batch);
  Eigen::MatrixXd d_out = 2.0 * (x_hat - batch) / static_cast<double>(batch.size());
  Eigen::MatrixXd d_bottleneck = mlp_backward(model.decoder, cache.decoder, d_out, &grads.decoder);
  mlp_backward(model.encoder, cache.encoder, d_bottleneck, &grads.encoder);
  return grads;
}

// One gradient-descent update on a batch; returns the batch MSE.
inline double backward_step(ToyModel& model, const Eigen::MatrixXd& batch, QuantMode mode,
                            double learning_rate, SplitMix64& rng) {
  Eigen::MatrixXd noise;
  if (mode == QuantMode::noise) noise = draw_surrogate_noise(model.grid, batch.cols(), rng);
  PsqGrads grads = psq_backward(model, batch, mode, noise);
  if (!std::isfinite(grads.mse)) return grads.mse;
  mlp_apply_sgd(model.encoder, grads.encoder, learning_rate);
  mlp_apply_sgd(model.decoder, grads.decoder, learning_rate);
  return grads.mse;
}

// Fraction of quantizer cells selected by at least one data point (eval mode).
inline double utilization(const ToyModel& model, const Eigen::MatrixXd& data_points) {
  Eigen::MatrixXd z = mlp_forward(model.encoder, data_points.transpose());
  std::vector<bool> occupied(static_cast<std::size_t>(total_cells(model.grid)), false);
  for (Eigen::Index c = 0; c < z.cols(); ++c)
    occupied[static_cast<std::size_t>(flatten_cell(model.grid, quantize(model.grid, z.col(c))))] = true;
  std::size_t used = 0;
  for (bool b : occupied)
    if (b) ++used;
  return static_cast<double>(used) / static_cast<double>(occupied.size());
}

struct TrainResult {
  ToyModel model;
  std::vector<std::pair<int, double>> history;  // (step, eval MSE on the full set)
  double final_mse = 0.0;
  double utilization = 0.0;
  bool diverged = false;
  int steps_completed = 0;
};

// Trains forward/backward for config.steps; on divergence the last finite
// state is returned with the diverged flag set.
inline TrainResult train_psq(const TrainConfig& config, const TwoMoonsSet& data) {
  validate(config);
  if (data.n < 1) throw std::invalid_argument("train_psq: empty data set");
  TrainResult result;
  result.model = make_toy_model(config.grid, config.hidden, config.seed);
  SplitMix64 rng(derive_seed(config.seed, 2));
  const Eigen::MatrixXd full = data.points.transpose();  // 2 x N
  auto eval_mse = [&]() { return mse(psq_forward_eval(result.model, full), full); };
  result.history.emplace_back(0, eval_mse());
  ToyModel last_good = result.model;
  for (int step = 1; step <= config.steps; ++step) {
    Eigen::MatrixXd batch(2, config.batch_size);
    for (int b = 0; b < config.batch_size; ++b) {
      int pick = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(data.n));
      batch.col(b) = data.points.row(pick).transpose();
    }
    double batch_mse = backward_step(result.model, batch, config.mode, config.learning_rate, rng);
    if (!std::isfinite(batch_mse)) {
      result.model = last_good;
      result.diverged = true;
      break;
    }
    last_good = result.model;
    result.steps_completed = step;
    if (step % config.history_stride == 0 || step == config.steps)
      result.history.emplace_back(step, eval_mse());
  }
  result.final_mse = eval_mse();
  result.utilization = utilization(result.model, data.points);
  return result;
}

// Full effective codebook: every quantizer cell decoded to output space.
// Rows are indexed by the flattened cell id.
inline Eigen::MatrixXd effective_codebook(const ToyModel& model) {
  const std::uint64_t cells = total_cells(model.grid);
  Eigen::MatrixXd latents(model.grid.dims, static_cast<Eigen::Index>(cells));
  for (std::uint64_t cell = 0; cell < cells; ++cell)
    latents.col(static_cast<Eigen::Index>(cell)) = dequantize(model.grid, unflatten_cell(model.grid, cell));
  return mlp_forward(model.decoder, latents).transpose();  // cells x 2
}

struct DecisionRegions {
  int resolution = 0;
  std::vector<std::uint64_t> cell_index;             // resolution^2 raster, row-major, top row = y = +1
  std::vector<std::pair<std::uint64_t, Eigen::Vector2d>> codepoints;  // occupied cells only
};

// Rasterizes [-1,1]^2 at pixel centers: each pixel gets the flattened
// bottleneck cell, plus the decoded codepoint of every occupied cell.
inline DecisionRegions decision_regions(const ToyModel& model, int resolution) {
  if (resolution < 2) throw std::invalid_argument("decision_regions: resolution must be >= 2");
  DecisionRegions out;
  out.resolution = resolution;
  out.cell_index.resize(static_cast<std::size_t>(resolution) * static_cast<std::size_t>(resolution));
  Eigen::MatrixXd grid_points(2, resolution * resolution);
  for (int i = 0; i < resolution; ++i)
    for (int j = 0; j < resolution; ++j) {
      grid_points(0, i * resolution + j) = -1.0 + (j + 0.5) * 2.0 / resolution;
      grid_points(1, i * resolution + j) = 1.0 - (i + 0.5) * 2.0 / resolution;
    }
  Eigen::MatrixXd z = mlp_forward(model.encoder, grid_points);
  std::vector<bool> occupied(static_cast<std::size_t>(total_cells(model.grid)), false);
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    std::uint64_t cell = flatten_cell(model.grid, quantize(model.grid, z.col(c)));
    out.cell_index[static_cast<std::size_t>(c)] = cell;
    occupied[static_cast<std::size_t>(cell)] = true;
  }
  Eigen::MatrixXd codebook = effective_codebook(model);
  for (std::uint64_t cell = 0; cell < occupied.size(); ++cell)
    if (occupied[static_cast<std::size_t>(cell)])
      out.codepoints.emplace_back(cell, codebook.row(static_cast<Eigen::Index>(cell)).transpose());
  return out;
}

}  // namespace nsq
