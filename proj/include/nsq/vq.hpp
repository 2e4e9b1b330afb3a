#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "nsq/rng.hpp"

namespace nsq {

// VQ codebook with the EMA statistics used for k-means style learning.
// vectors is L x d (one codevector per row).
struct Codebook {
  Eigen::MatrixXd vectors;
  Eigen::VectorXd ema_counts;
  Eigen::MatrixXd ema_sums;
  double decay = 0.99;
  double epsilon = 1e-5;

  int size() const { return static_cast<int>(vectors.rows()); }
  int dim() const { return static_cast<int>(vectors.cols()); }
};

inline Codebook make_codebook(int num_vectors, int dim, double decay = 0.99,
                              double epsilon = 1e-5) {
  if (num_vectors < 1 || dim < 1) throw std::invalid_argument("codebook: L and d must be >= 1");
  if (decay < 0.0 || decay > 1.0) throw std::invalid_argument("codebook: decay must be in [0,1]");
  Codebook cb;
  cb.vectors = Eigen::MatrixXd::Zero(num_vectors, dim);
  cb.ema_counts = Eigen::VectorXd::Zero(num_vectors);
  cb.ema_sums = Eigen::MatrixXd::Zero(num_vectors, dim);
  cb.decay = decay;
  cb.epsilon = epsilon;
  return cb;
}

// Index of the codevector with minimal squared distance; ties go to the
// lowest index so bitstreams stay deterministic.
inline int nearest(const Codebook& cb, const Eigen::VectorXd& z) {
  if (cb.size() < 1) throw std::invalid_argument("nearest: empty codebook");
  if (z.size() != cb.dim()) throw std::invalid_argument("nearest: dimension mismatch");
  int best = 0;
  double best_d = (cb.vectors.row(0).transpose() - z).squaredNorm();
  for (int l = 1; l < cb.size(); ++l) {
    double d = (cb.vectors.row(l).transpose() - z).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = l;
    }
  }
  return best;
}

struct VqLosses {
  double vq_loss = 0.0;
  double commitment_loss = 0.0;
  double weighted_total = 0.0;
};

// Numerically both terms are ||z - zq||^2; the stop-gradient split between
// them only matters for which side receives updates during training.
inline VqLosses vq_losses(const Eigen::VectorXd& z, const Eigen::VectorXd& zq, double beta) {
  if (z.size() != zq.size()) throw std::invalid_argument("vq_losses: length mismatch");
  if (beta < 0.0) throw std::invalid_argument("vq_losses: beta must be >= 0");
  double d = (z - zq).squaredNorm();
  return VqLosses{d, d, d + beta * d};
}

// One EMA k-means update:
//   counts <- decay*counts + (1-decay)*|cluster|
//   sums   <- decay*sums   + (1-decay)*sum of assigned samples
//   vectors <- sums / (counts + epsilon)
// batch is N x d, one sample per row. Single-writer: callers serialize.
inline Codebook ema_update(Codebook cb, const Eigen::MatrixXd& batch,
                           const std::vector<int>& assignments) {
  if (batch.cols() != cb.dim()) throw std::invalid_argument("ema_update: dimension mismatch");
  if (static_cast<int>(assignments.size()) != batch.rows())
    throw std::invalid_argument("ema_update: assignments length != batch size");
  if (cb.decay == 1.0) return cb;  // statistics receive zero new mass
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(cb.size());
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(cb.size(), cb.dim());
  for (int n = 0; n < batch.rows(); ++n) {
    int a = assignments[static_cast<std::size_t>(n)];
    if (a < 0 || a >= cb.size()) throw std::invalid_argument("ema_update: assignment out of range");
    counts[a] += 1.0;
    sums.row(a) += batch.row(n);
  }
  cb.ema_counts = cb.decay * cb.ema_counts + (1.0 - cb.decay) * counts;
  cb.ema_sums = cb.decay * cb.ema_sums + (1.0 - cb.decay) * sums;
  for (int l = 0; l < cb.size(); ++l) {
    double denom = cb.ema_counts[l] + cb.epsilon;
    if (denom > 0.0) cb.vectors.row(l) = cb.ema_sums.row(l) / denom;
  }
  return cb;
}

// Replaces codevectors whose EMA count fell below the threshold with samples
// drawn uniformly from the batch; their stats restart at (1, sample).
inline Codebook reinit_dead(Codebook cb, const Eigen::MatrixXd& batch, double count_threshold,
                            std::uint64_t seed) {
  if (batch.rows() < 1) throw std::invalid_argument("reinit_dead: empty batch");
  if (batch.cols() != cb.dim()) throw std::invalid_argument("reinit_dead: dimension mismatch");
  SplitMix64 rng(seed);
  for (int l = 0; l < cb.size(); ++l) {
    if (cb.ema_counts[l] < count_threshold) {
      int pick = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(batch.rows()));
      cb.vectors.row(l) = batch.row(pick);
      cb.ema_counts[l] = 1.0;
      cb.ema_sums.row(l) = batch.row(pick);
    }
  }
  return cb;
}

// k-means++ style seeding from a batch: first center uniform, the rest
// proportional to squared distance from the chosen set.
inline Codebook kmeanspp_init(const Eigen::MatrixXd& batch, int num_vectors, std::uint64_t seed,
                              double decay = 0.99, double epsilon = 1e-5) {
  if (batch.rows() < 1) throw std::invalid_argument("kmeanspp_init: empty batch");
  Codebook cb = make_codebook(num_vectors, static_cast<int>(batch.cols()), decay, epsilon);
  SplitMix64 rng(seed);
  const int n = static_cast<int>(batch.rows());
  int first = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n));
  cb.vectors.row(0) = batch.row(first);
  Eigen::VectorXd d2(n);
  for (int i = 0; i < n; ++i) d2[i] = (batch.row(i) - cb.vectors.row(0)).squaredNorm();
  for (int l = 1; l < num_vectors; ++l) {
    double total = d2.sum();
    int pick;
    if (total <= 0.0) {
      pick = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n));
    } else {
      double r = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (int i = 0; i < n; ++i) {
        acc += d2[i];
        if (r < acc) {
          pick = i;
          break;
        }
      }
    }
    cb.vectors.row(l) = batch.row(pick);
    for (int i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], (batch.row(i) - cb.vectors.row(l)).squaredNorm());
  }
  cb.ema_counts.setOnes();
  cb.ema_sums = cb.vectors;
  return cb;
}

// Cascade of codebooks, each stage quantizing the previous residual.
struct RvqStack {
  std::vector<Codebook> stages;

  int num_stages() const { return static_cast<int>(stages.size()); }
  int dim() const { return stages.empty() ? 0 : stages.front().dim(); }
};

inline void validate_stack(const RvqStack& stack) {
  if (stack.stages.empty()) throw std::invalid_argument("rvq: stack needs >= 1 stage");
  for (const Codebook& cb : stack.stages)
    if (cb.dim() != stack.dim()) throw std::invalid_argument("rvq: stage dimension mismatch");
}

inline std::vector<int> rvq_encode(const RvqStack& stack, Eigen::VectorXd z) {
  validate_stack(stack);
  if (z.size() != stack.dim()) throw std::invalid_argument("rvq_encode: dimension mismatch");
  std::vector<int> indices;
  indices.reserve(stack.stages.size());
  for (const Codebook& cb : stack.stages) {
    int k = nearest(cb, z);
    indices.push_back(k);
    z -= cb.vectors.row(k).transpose();
  }
  return indices;
}

// Decodes the first use_stages stages (all by default) by summing the
// selected codevectors.
inline Eigen::VectorXd rvq_decode(const RvqStack& stack, const std::vector<int>& indices,
                                  int use_stages = -1) {
  validate_stack(stack);
  if (indices.size() != stack.stages.size())
    throw std::invalid_argument("rvq_decode: one index per stage required");
  if (use_stages < 0) use_stages = stack.num_stages();
  if (use_stages > stack.num_stages())
    throw std::invalid_argument("rvq_decode: use_stages exceeds stack depth");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(stack.dim());
  for (int s = 0; s < use_stages; ++s) {
    const Codebook& cb = stack.stages[static_cast<std::size_t>(s)];
    int k = indices[static_cast<std::size_t>(s)];
    if (k < 0 || k >= cb.size()) throw std::out_of_range("rvq_decode: index out of range");
    out += cb.vectors.row(k).transpose();
  }
  return out;
}

// Builds a cascade by per-stage k-means on the residuals of the previous
// stage. Every stage keeps the zero vector as its last codevector, so a stage
// can always pass its input through: decoding with a stage prefix is then a
// monotone refinement for every input, which is what bitrate scalability by
// dropping stages relies on.
inline RvqStack make_refining_stack(const Eigen::MatrixXd& points, int vectors_per_stage,
                                    int num_stages, std::uint64_t seed, int lloyd_iters = 4) {
  if (points.rows() < 1) throw std::invalid_argument("make_refining_stack: empty point set");
  if (vectors_per_stage < 1 || num_stages < 1)
    throw std::invalid_argument("make_refining_stack: stages and vectors must be >= 1");
  const int d = static_cast<int>(points.cols());
  RvqStack stack;
  Eigen::MatrixXd residuals = points;
  for (int s = 0; s < num_stages; ++s) {
    Codebook cb = make_codebook(vectors_per_stage, d);
    if (vectors_per_stage > 1) {
      Codebook trained = kmeanspp_init(residuals, vectors_per_stage - 1,
                                       derive_seed(seed, static_cast<std::uint64_t>(s)));
      trained.decay = 0.0;
      for (int it = 0; it < lloyd_iters; ++it) {
        std::vector<int> assign;
        assign.reserve(static_cast<std::size_t>(residuals.rows()));
        for (int n = 0; n < residuals.rows(); ++n)
          assign.push_back(nearest(trained, residuals.row(n).transpose()));
        trained = ema_update(trained, residuals, assign);
      }
      cb.vectors.topRows(vectors_per_stage - 1) = trained.vectors;
    }
    cb.vectors.row(vectors_per_stage - 1).setZero();
    cb.ema_counts.setOnes();
    cb.ema_sums = cb.vectors;
    stack.stages.push_back(cb);
    for (int n = 0; n < residuals.rows(); ++n) {
      int k = nearest(stack.stages.back(), residuals.row(n).transpose());
      residuals.row(n) -= stack.stages.back().vectors.row(k);
    }
  }
  return stack;
}

// Q stages of L vectors each cost Q * ceil(log2 L) bits per frame.
inline int rvq_bits_per_frame(const RvqStack& stack) {
  validate_stack(stack);
  int bits = 0;
  for (const Codebook& cb : stack.stages) {
    int b = 0;
    while ((1 << b) < cb.size()) ++b;
    bits += b;
  }
  return bits;
}

// Checkpoint format: magic "NSQC", version byte, d as u16 LE, L as u32 LE,
// then L*d row-major doubles, little-endian.
inline void save_codebook(const std::string& path, const Codebook& cb) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_codebook: cannot open " + path);
  f.write("NSQC", 4);
  char version = 1;
  f.write(&version, 1);
  std::uint16_t d = static_cast<std::uint16_t>(cb.dim());
  std::uint32_t L = static_cast<std::uint32_t>(cb.size());
  f.write(reinterpret_cast<const char*>(&d), 2);
  f.write(reinterpret_cast<const char*>(&L), 4);
  for (int l = 0; l < cb.size(); ++l)
    for (int j = 0; j < cb.dim(); ++j) {
      double v = cb.vectors(l, j);
      f.write(reinterpret_cast<const char*>(&v), 8);
    }
  if (!f) throw std::runtime_error("save_codebook: write failed for " + path);
}

inline Codebook load_codebook(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_codebook: cannot open " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, "NSQC", 4) != 0)
    throw std::runtime_error("load_codebook: bad magic");
  char version = 0;
  f.read(&version, 1);
  if (!f || version != 1) throw std::runtime_error("load_codebook: unsupported version");
  std::uint16_t d = 0;
  std::uint32_t L = 0;
  f.read(reinterpret_cast<char*>(&d), 2);
  f.read(reinterpret_cast<char*>(&L), 4);
  if (!f || d < 1 || L < 1) throw std::runtime_error("load_codebook: bad shape");
  Codebook cb = make_codebook(static_cast<int>(L), static_cast<int>(d));
  for (std::uint32_t l = 0; l < L; ++l)
    for (std::uint16_t j = 0; j < d; ++j) {
      double v;
      f.read(reinterpret_cast<char*>(&v), 8);
      if (!f) throw std::runtime_error("load_codebook: truncated file");
      cb.vectors(static_cast<int>(l), static_cast<int>(j)) = v;
    }
  return cb;
}

}  // namespace nsq
