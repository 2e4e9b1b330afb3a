#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "nsq/rng.hpp"

namespace nsq {

// Uniform per-dimension scalar quantizer over [-1, 1]. Even level counts give
// the classic mid-rise grid (reconstruction at cell centers (i + 0.5) * step,
// no zero level); odd level counts fall back to a mid-tread lattice so the
// step/2 error bound keeps holding. Inputs outside the grid saturate to the
// boundary cells.
struct QuantizerGrid {
  int dims = 1;        // Q, vector dimension the grid applies to element-wise
  int levels = 2;      // level count per dimension, >= 2
  double step = 1.0;   // delta = 2 / levels
  int index_min = -1;
  int index_max = 0;

  bool mid_tread() const { return levels % 2 != 0; }
  // Reconstruction offset: 0.5 for mid-rise, 0 for mid-tread.
  double recon_offset() const { return mid_tread() ? 0.0 : 0.5; }
};

inline QuantizerGrid make_grid_levels(int levels_per_dim, int dims) {
  if (levels_per_dim < 2) throw std::invalid_argument("quantizer: levels_per_dim must be >= 2");
  if (dims < 1) throw std::invalid_argument("quantizer: dims must be >= 1");
  QuantizerGrid g;
  g.dims = dims;
  g.levels = levels_per_dim;
  g.step = 2.0 / static_cast<double>(levels_per_dim);
  if (levels_per_dim % 2 == 0) {
    g.index_min = -levels_per_dim / 2;
    g.index_max = levels_per_dim / 2 - 1;
  } else {
    g.index_min = -(levels_per_dim - 1) / 2;
    g.index_max = (levels_per_dim - 1) / 2;
  }
  return g;
}

// Mid-rise grid with 2^bits levels per dimension, step = 2 / 2^bits.
inline QuantizerGrid make_grid(int bits_per_dim, int dims) {
  if (bits_per_dim < 1) throw std::invalid_argument("quantizer: bits_per_dim must be >= 1");
  if (bits_per_dim > 30) throw std::invalid_argument("quantizer: bits_per_dim too large");
  return make_grid_levels(1 << bits_per_dim, dims);
}

inline void check_input(const QuantizerGrid& grid, const Eigen::VectorXd& z) {
  if (z.size() != grid.dims) throw std::invalid_argument("quantizer: input length != grid dims");
  if (!z.allFinite()) throw std::invalid_argument("quantizer: non-finite input");
}

// Per dimension: floor(z/step) (mid-rise) resp. floor(z/step + 0.5)
// (mid-tread), saturated to [index_min, index_max].
inline Eigen::VectorXi quantize(const QuantizerGrid& grid, const Eigen::VectorXd& z) {
  check_input(grid, z);
  const double shift = 0.5 - grid.recon_offset();
  Eigen::VectorXi k(grid.dims);
  for (int q = 0; q < grid.dims; ++q) {
    double cell = std::floor(z[q] / grid.step + shift);
    if (cell < grid.index_min) cell = grid.index_min;
    if (cell > grid.index_max) cell = grid.index_max;
    k[q] = static_cast<int>(cell);
  }
  return k;
}

inline Eigen::VectorXd dequantize(const QuantizerGrid& grid, const Eigen::VectorXi& k) {
  if (k.size() != grid.dims) throw std::invalid_argument("quantizer: index length != grid dims");
  Eigen::VectorXd z(grid.dims);
  for (int q = 0; q < grid.dims; ++q) {
    if (k[q] < grid.index_min || k[q] > grid.index_max)
      throw std::out_of_range("quantizer: index outside grid range");
    z[q] = (static_cast<double>(k[q]) + grid.recon_offset()) * grid.step;
  }
  return z;
}

// Uniform dither on [-step/2, step/2), one draw per dimension.
inline Eigen::VectorXd draw_dither(const QuantizerGrid& grid, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Eigen::VectorXd n(grid.dims);
  for (int q = 0; q < grid.dims; ++q) n[q] = grid.step * (rng.uniform() - 0.5);
  return n;
}

// Training-time surrogate: z plus uniform noise on [-step/2, step/2)^Q.
inline Eigen::VectorXd noise_surrogate(const QuantizerGrid& grid, const Eigen::VectorXd& z,
                                       std::uint64_t seed) {
  check_input(grid, z);
  return z + draw_dither(grid, seed);
}

struct DitheredResult {
  Eigen::VectorXi indices;
  Eigen::VectorXd dither;
};

inline DitheredResult dithered_quantize(const QuantizerGrid& grid, const Eigen::VectorXd& z,
                                        const Eigen::VectorXd& dither) {
  check_input(grid, z);
  if (dither.size() != grid.dims) throw std::invalid_argument("quantizer: dither length != dims");
  return DitheredResult{quantize(grid, z + dither), dither};
}

inline DitheredResult dithered_quantize(const QuantizerGrid& grid, const Eigen::VectorXd& z,
                                        std::uint64_t seed) {
  return dithered_quantize(grid, z, draw_dither(grid, seed));
}

inline Eigen::VectorXd dithered_dequantize(const QuantizerGrid& grid, const Eigen::VectorXi& k,
                                           const Eigen::VectorXd& dither) {
  if (dither.size() != grid.dims) throw std::invalid_argument("quantizer: dither length != dims");
  return dequantize(grid, k) - dither;
}

// Receiver side: the dither is regenerated from the shared seed, nothing but
// the indices travels over the wire.
inline Eigen::VectorXd dithered_dequantize(const QuantizerGrid& grid, const Eigen::VectorXi& k,
                                           std::uint64_t seed) {
  return dithered_dequantize(grid, k, draw_dither(grid, seed));
}

// Number of grid cells, levels^dims.
inline std::uint64_t total_cells(const QuantizerGrid& grid) {
  std::uint64_t cells = 1;
  for (int q = 0; q < grid.dims; ++q) cells *= static_cast<std::uint64_t>(grid.levels);
  return cells;
}

// Flat cell id of an index vector, first dimension most significant.
inline std::uint64_t flatten_cell(const QuantizerGrid& grid, const Eigen::VectorXi& k) {
  if (k.size() != grid.dims) throw std::invalid_argument("flatten_cell: index length != dims");
  std::uint64_t cell = 0;
  for (int q = 0; q < grid.dims; ++q) {
    if (k[q] < grid.index_min || k[q] > grid.index_max)
      throw std::out_of_range("flatten_cell: index outside grid range");
    cell = cell * static_cast<std::uint64_t>(grid.levels) +
           static_cast<std::uint64_t>(k[q] - grid.index_min);
  }
  return cell;
}

inline Eigen::VectorXi unflatten_cell(const QuantizerGrid& grid, std::uint64_t cell) {
  if (cell >= total_cells(grid)) throw std::out_of_range("unflatten_cell: cell id out of range");
  Eigen::VectorXi k(grid.dims);
  for (int q = grid.dims - 1; q >= 0; --q) {
    k[q] = static_cast<int>(cell % static_cast<std::uint64_t>(grid.levels)) + grid.index_min;
    cell /= static_cast<std::uint64_t>(grid.levels);
  }
  return k;
}

// Straight-through contract: forward is the hard round trip, backward passes
// upstream gradients through unchanged.
struct StraightThrough {
  Eigen::VectorXd value;
  Eigen::VectorXd backward(const Eigen::VectorXd& upstream) const { return upstream; }
};

inline StraightThrough st_apply(const QuantizerGrid& grid, const Eigen::VectorXd& z) {
  return StraightThrough{dequantize(grid, quantize(grid, z))};
}

}  // namespace nsq
