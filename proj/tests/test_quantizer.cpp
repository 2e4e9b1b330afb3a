#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "nsq/analysis.hpp"
#include "nsq/quantizer.hpp"

using nsq::QuantizerGrid;

TEST_CASE("make_grid builds the symmetric mid-rise grid") {
  QuantizerGrid g = nsq::make_grid(2, 1);
  CHECK(g.step == 0.5);
  CHECK(g.index_min == -2);
  CHECK(g.index_max == 1);
  Eigen::VectorXd levels(4);
  for (int i = g.index_min; i <= g.index_max; ++i)
    levels[i - g.index_min] = nsq::dequantize(g, Eigen::VectorXi::Constant(1, i))[0];
  CHECK(levels[0] == -0.75);
  CHECK(levels[1] == -0.25);
  CHECK(levels[2] == 0.25);
  CHECK(levels[3] == 0.75);

  QuantizerGrid b1 = nsq::make_grid(1, 3);
  CHECK(b1.step == 1.0);
  CHECK(nsq::dequantize(b1, Eigen::VectorXi::Constant(3, -1))[0] == -0.5);
  CHECK(nsq::dequantize(b1, Eigen::VectorXi::Constant(3, 0))[2] == 0.5);

  QuantizerGrid b3 = nsq::make_grid(3, 2);
  CHECK(b3.levels == 8);
  CHECK(nsq::total_cells(b3) == 64);
}

TEST_CASE("make_grid rejects bad arguments") {
  CHECK_THROWS_AS(nsq::make_grid(0, 1), std::invalid_argument);
  CHECK_THROWS_AS(nsq::make_grid(-1, 2), std::invalid_argument);
  CHECK_THROWS_AS(nsq::make_grid(3, 0), std::invalid_argument);
  CHECK_THROWS_AS(nsq::make_grid_levels(1, 2), std::invalid_argument);
}

TEST_CASE("grid levels always lie inside [-1, 1]") {
  for (int levels = 2; levels <= 9; ++levels) {
    QuantizerGrid g = nsq::make_grid_levels(levels, 1);
    CHECK(g.index_max - g.index_min + 1 == levels);
    for (int i = g.index_min; i <= g.index_max; ++i) {
      double level = nsq::dequantize(g, Eigen::VectorXi::Constant(1, i))[0];
      CHECK(level >= -1.0);
      CHECK(level <= 1.0);
    }
  }
}

TEST_CASE("quantize follows floor arithmetic with saturation") {
  QuantizerGrid g = nsq::make_grid(2, 1);  // step 0.5
  auto q1 = [&](double z) { return nsq::quantize(g, Eigen::VectorXd::Constant(1, z))[0]; };
  CHECK(q1(0.3) == 0);
  CHECK(q1(-1.0) == -2);  // floor hits index_min exactly
  CHECK(q1(1.0) == 1);    // floor gives 2, saturated
  CHECK(q1(-0.001) == -1);
  CHECK(q1(5.0) == 1);
  CHECK(q1(-5.0) == -2);
}

TEST_CASE("quantize rejects non-finite and misshaped input") {
  QuantizerGrid g = nsq::make_grid(2, 2);
  Eigen::VectorXd bad(2);
  bad << 0.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(nsq::quantize(g, bad), std::invalid_argument);
  bad << 0.0, std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(nsq::quantize(g, bad), std::invalid_argument);
  CHECK_THROWS_AS(nsq::quantize(g, Eigen::VectorXd::Zero(3)), std::invalid_argument);
}

TEST_CASE("dequantize maps indices to cell centers and validates range") {
  QuantizerGrid g = nsq::make_grid(2, 1);
  CHECK(nsq::dequantize(g, Eigen::VectorXi::Constant(1, 0))[0] == 0.25);
  CHECK(nsq::dequantize(g, Eigen::VectorXi::Constant(1, -2))[0] == -0.75);
  CHECK_THROWS_AS(nsq::dequantize(g, Eigen::VectorXi::Constant(1, 2)), std::out_of_range);
  CHECK_THROWS_AS(nsq::dequantize(g, Eigen::VectorXi::Constant(1, -3)), std::out_of_range);
}

TEST_CASE("round trip stays within half a step everywhere in [-1,1]") {
  nsq::SplitMix64 rng(20240817);
  for (int levels = 2; levels <= 9; ++levels) {
    QuantizerGrid g = nsq::make_grid_levels(levels, 4);
    for (int trial = 0; trial < 2000; ++trial) {
      Eigen::VectorXd z(4);
      for (int q = 0; q < 4; ++q) z[q] = rng.uniform(-1.0, 1.0);
      Eigen::VectorXd zq = nsq::dequantize(g, nsq::quantize(g, z));
      for (int q = 0; q < 4; ++q) CHECK(std::abs(zq[q] - z[q]) <= g.step / 2 + 1e-15);
    }
  }
}

TEST_CASE("quantize after dequantize is the identity on indices") {
  nsq::SplitMix64 rng(7);
  for (int levels : {2, 4, 5, 8}) {
    QuantizerGrid g = nsq::make_grid_levels(levels, 3);
    for (int trial = 0; trial < 200; ++trial) {
      Eigen::VectorXi k(3);
      for (int q = 0; q < 3; ++q)
        k[q] = g.index_min + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(levels));
      Eigen::VectorXi k2 = nsq::quantize(g, nsq::dequantize(g, k));
      CHECK(k2 == k);
    }
  }
}

TEST_CASE("noise surrogate stays on its half-open support") {
  QuantizerGrid g = nsq::make_grid(2, 8);
  Eigen::VectorXd z = Eigen::VectorXd::Constant(8, 0.1);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Eigen::VectorXd noisy = nsq::noise_surrogate(g, z, seed);
    for (int q = 0; q < 8; ++q) {
      CHECK(noisy[q] - z[q] >= -g.step / 2);
      CHECK(noisy[q] - z[q] < g.step / 2);
    }
  }
}

TEST_CASE("noise surrogate matches the uniform moments") {
  QuantizerGrid g = nsq::make_grid(2, 1);  // step 0.5
  const long n = 1000000;
  double sum = 0.0, sum2 = 0.0;
  Eigen::VectorXd z = Eigen::VectorXd::Zero(1);
  nsq::SplitMix64 rng(42);
  for (long i = 0; i < n; ++i) {
    double d = g.step * (rng.uniform() - 0.5);
    sum += d;
    sum2 += d * d;
  }
  double mean = sum / n;
  double var = sum2 / n - mean * mean;
  double ref_var = g.step * g.step / 12.0;
  // CLT bound: 3 sigma of the sample mean.
  CHECK(std::abs(mean) <= 3.0 * std::sqrt(ref_var / n));
  CHECK(std::abs(var - ref_var) / ref_var <= 0.01);
  // The library path draws the same way.
  Eigen::VectorXd noisy = nsq::noise_surrogate(g, z, 42);
  nsq::SplitMix64 check(42);
  CHECK(noisy[0] == g.step * (check.uniform() - 0.5));
}

TEST_CASE("same seed means bit-identical outputs") {
  QuantizerGrid g = nsq::make_grid(3, 5);
  Eigen::VectorXd z(5);
  z << -0.8, -0.2, 0.0, 0.33, 0.9;
  CHECK(nsq::noise_surrogate(g, z, 123) == nsq::noise_surrogate(g, z, 123));
  auto a = nsq::dithered_quantize(g, z, std::uint64_t{55});
  auto b = nsq::dithered_quantize(g, z, std::uint64_t{55});
  CHECK(a.indices == b.indices);
  CHECK(a.dither == b.dither);
}

TEST_CASE("zero dither degenerates to plain quantization") {
  QuantizerGrid g = nsq::make_grid(2, 3);
  Eigen::VectorXd z(3);
  z << -0.4, 0.1, 0.7;
  auto res = nsq::dithered_quantize(g, z, Eigen::VectorXd::Zero(3));
  CHECK(res.indices == nsq::quantize(g, z));
  CHECK(nsq::dithered_dequantize(g, res.indices, Eigen::VectorXd::Zero(3)) ==
        nsq::dequantize(g, res.indices));
}

TEST_CASE("dithered reconstruction error bounded for interior points") {
  QuantizerGrid g = nsq::make_grid(2, 1);  // step 0.5
  for (std::uint64_t seed = 1; seed <= 500; ++seed) {
    Eigen::VectorXd z = Eigen::VectorXd::Constant(1, 0.2);
    auto enc = nsq::dithered_quantize(g, z, seed);
    Eigen::VectorXd rec = nsq::dithered_dequantize(g, enc.indices, seed);
    CHECK(std::abs(rec[0] - z[0]) <= g.step / 2 + 1e-15);
  }
}

TEST_CASE("receiver regenerates the transmitter dither from the seed") {
  QuantizerGrid g = nsq::make_grid(4, 6);
  Eigen::VectorXd z(6);
  z << 0.5, -0.5, 0.05, -0.05, 0.25, -0.25;
  const std::uint64_t shared_seed = 7777;
  auto enc = nsq::dithered_quantize(g, z, shared_seed);
  Eigen::VectorXd rx = nsq::dithered_dequantize(g, enc.indices, shared_seed);
  Eigen::VectorXd tx = nsq::dequantize(g, enc.indices) - enc.dither;
  CHECK(rx == tx);
}

TEST_CASE("dithered reconstruction and noise surrogate agree in distribution") {
  // Two-sample KS on a fixed interior z, per the subtractive-dither identity.
  QuantizerGrid g = nsq::make_grid(2, 1);
  const double z0 = 0.2;
  const long n = 100000;
  Eigen::VectorXd z = Eigen::VectorXd::Constant(1, z0);
  std::vector<double> surrogate(n), dithered(n);
  for (long i = 0; i < n; ++i) {
    surrogate[i] = nsq::noise_surrogate(g, z, nsq::derive_seed(1000, static_cast<std::uint64_t>(i)))[0];
    std::uint64_t seed = nsq::derive_seed(2000, static_cast<std::uint64_t>(i));
    auto enc = nsq::dithered_quantize(g, z, seed);
    dithered[i] = nsq::dithered_dequantize(g, enc.indices, seed)[0];
  }
  auto ks = nsq::ks_two_sample(surrogate, dithered, 0.01);
  CHECK(ks.pass);
}

TEST_CASE("straight-through forward equals the hard round trip, backward is identity") {
  QuantizerGrid g = nsq::make_grid(3, 4);
  nsq::SplitMix64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd z(4);
    for (int q = 0; q < 4; ++q) z[q] = rng.uniform(-1.0, 1.0);
    auto st = nsq::st_apply(g, z);
    CHECK(st.value == nsq::dequantize(g, nsq::quantize(g, z)));
    Eigen::VectorXd upstream(4);
    for (int q = 0; q < 4; ++q) upstream[q] = rng.uniform(-2.0, 2.0);
    CHECK(st.backward(upstream) == upstream);
  }
}

TEST_CASE("straight-through composes with tanh by the plain chain rule") {
  QuantizerGrid g = nsq::make_grid(4, 2);
  Eigen::VectorXd pre(2);
  pre << 0.3, -1.2;
  Eigen::VectorXd z = pre.array().tanh();
  auto st = nsq::st_apply(g, z);
  Eigen::VectorXd upstream(2);
  upstream << 0.5, -0.25;
  Eigen::VectorXd through_quant = st.backward(upstream);
  Eigen::VectorXd expected = (1.0 - z.array().square()) * upstream.array();
  Eigen::VectorXd chained = (1.0 - z.array().square()) * through_quant.array();
  CHECK(chained == expected);
}
