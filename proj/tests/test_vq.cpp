#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "nsq/rng.hpp"
#include "nsq/vq.hpp"
#include "support/oracles.hpp"

namespace {

nsq::Codebook random_codebook(int L, int d, std::uint64_t seed, double scale = 1.0) {
  nsq::Codebook cb = nsq::make_codebook(L, d);
  nsq::SplitMix64 rng(seed);
  for (int l = 0; l < L; ++l)
    for (int j = 0; j < d; ++j) cb.vectors(l, j) = scale * rng.normal();
  return cb;
}

Eigen::MatrixXd random_batch(int n, int d, std::uint64_t seed) {
  Eigen::MatrixXd batch(n, d);
  nsq::SplitMix64 rng(seed);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) batch(i, j) = rng.normal();
  return batch;
}

}  // namespace

TEST_CASE("nearest picks the minimal distance with low-index ties") {
  nsq::Codebook cb = nsq::make_codebook(2, 2);
  cb.vectors << 0, 0, 1, 1;
  Eigen::VectorXd z(2);
  z << 0.9, 0.8;
  CHECK(nsq::nearest(cb, z) == 1);
  z << 0.5, 0.5;  // exactly equidistant
  CHECK(nsq::nearest(cb, z) == 0);
  nsq::Codebook single = nsq::make_codebook(1, 2);
  z << 42.0, -7.0;
  CHECK(nsq::nearest(single, z) == 0);
}

TEST_CASE("nearest agrees with the exhaustive scan") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    nsq::Codebook cb = random_codebook(17, 5, seed);
    nsq::SplitMix64 rng(seed + 1000);
    for (int trial = 0; trial < 50; ++trial) {
      Eigen::VectorXd z(5);
      for (int j = 0; j < 5; ++j) z[j] = rng.normal();
      CHECK(nsq::nearest(cb, z) == oracle::exhaustive_nearest(cb.vectors, z));
    }
  }
}

TEST_CASE("nearest rejects bad input") {
  nsq::Codebook cb = nsq::make_codebook(2, 3);
  CHECK_THROWS_AS(nsq::nearest(cb, Eigen::VectorXd::Zero(2)), std::invalid_argument);
  CHECK_THROWS_AS(nsq::make_codebook(0, 3), std::invalid_argument);
}

TEST_CASE("vq losses are squared distances with the beta weighting") {
  Eigen::VectorXd z(2), zq(2);
  z << 1, 0;
  zq << 0, 0;
  auto l = nsq::vq_losses(z, zq, 0.25);
  CHECK(l.vq_loss == 1.0);
  CHECK(l.commitment_loss == 1.0);
  CHECK(l.weighted_total == 1.25);
  auto zero = nsq::vq_losses(z, z, 0.25);
  CHECK(zero.weighted_total == 0.0);
  CHECK(nsq::vq_losses(z, zq, 0.0).weighted_total == 1.0);
}

TEST_CASE("ema update with decay 0 is one k-means centroid step") {
  Eigen::MatrixXd batch = random_batch(64, 3, 11);
  nsq::Codebook cb = random_codebook(4, 3, 12);
  cb.decay = 0.0;
  cb.epsilon = 0.0;
  std::vector<int> assignments;
  for (int n = 0; n < batch.rows(); ++n)
    assignments.push_back(nsq::nearest(cb, batch.row(n).transpose()));
  // Every cluster must be hit for the epsilon-free division to be exact.
  bool all_hit = true;
  for (int l = 0; l < 4; ++l)
    if (std::count(assignments.begin(), assignments.end(), l) == 0) all_hit = false;
  REQUIRE(all_hit);
  nsq::Codebook updated = nsq::ema_update(cb, batch, assignments);
  Eigen::MatrixXd expected = oracle::centroid_step(batch, assignments, 4);
  CHECK((updated.vectors - expected).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("ema update with decay 1 leaves the codebook unchanged") {
  Eigen::MatrixXd batch = random_batch(16, 2, 21);
  nsq::Codebook cb = random_codebook(3, 2, 22);
  cb.decay = 1.0;
  Eigen::MatrixXd before = cb.vectors;
  nsq::Codebook updated = nsq::ema_update(cb, batch, std::vector<int>(16, 0));
  CHECK(updated.vectors == before);
}

TEST_CASE("empty clusters shrink monotonically toward zero") {
  nsq::Codebook cb = random_codebook(2, 2, 31);
  cb.ema_counts << 1.0, 1.0;
  cb.ema_sums = cb.vectors;
  Eigen::MatrixXd batch = random_batch(8, 2, 32);
  double prev = cb.vectors.row(1).norm();
  for (int it = 0; it < 5; ++it) {
    cb = nsq::ema_update(cb, batch, std::vector<int>(8, 0));  // cluster 1 stays empty
    double now = cb.vectors.row(1).norm();
    CHECK(now < prev);
    prev = now;
  }
}

TEST_CASE("ema update validates shapes") {
  nsq::Codebook cb = nsq::make_codebook(2, 3);
  Eigen::MatrixXd batch = random_batch(4, 2, 41);
  CHECK_THROWS_AS(nsq::ema_update(cb, batch, std::vector<int>(4, 0)), std::invalid_argument);
  Eigen::MatrixXd ok = random_batch(4, 3, 42);
  CHECK_THROWS_AS(nsq::ema_update(cb, ok, std::vector<int>(3, 0)), std::invalid_argument);
  CHECK_THROWS_AS(nsq::ema_update(cb, ok, std::vector<int>(4, 7)), std::invalid_argument);
}

TEST_CASE("reinit_dead replaces only starved codevectors") {
  Eigen::MatrixXd batch = random_batch(32, 2, 51);
  nsq::Codebook cb = random_codebook(4, 2, 52);
  cb.ema_counts << 5.0, 5.0, 5.0, 5.0;
  Eigen::MatrixXd before = cb.vectors;
  CHECK(nsq::reinit_dead(cb, batch, 1.0, 99).vectors == before);

  nsq::Codebook all = nsq::reinit_dead(cb, batch, std::numeric_limits<double>::infinity(), 99);
  for (int l = 0; l < 4; ++l) {
    bool from_batch = false;
    for (int n = 0; n < batch.rows(); ++n)
      if (all.vectors.row(l) == batch.row(n)) from_batch = true;
    CHECK(from_batch);
    CHECK(all.ema_counts[l] == 1.0);
    CHECK(all.ema_sums.row(l) == all.vectors.row(l));
  }
}

TEST_CASE("reinit_dead does not hurt utilization on the same batch") {
  Eigen::MatrixXd batch = random_batch(64, 2, 61);
  nsq::Codebook cb = random_codebook(8, 2, 62, 10.0);  // far away: most vectors unused
  auto count_used = [&](const nsq::Codebook& book) {
    std::vector<bool> used(static_cast<std::size_t>(book.size()), false);
    for (int n = 0; n < batch.rows(); ++n)
      used[static_cast<std::size_t>(nsq::nearest(book, batch.row(n).transpose()))] = true;
    return std::count(used.begin(), used.end(), true);
  };
  // Mark everything dead except the vectors actually selected.
  cb.ema_counts.setZero();
  for (int n = 0; n < batch.rows(); ++n)
    cb.ema_counts[nsq::nearest(cb, batch.row(n).transpose())] += 1.0;
  long before = count_used(cb);
  nsq::Codebook after = nsq::reinit_dead(cb, batch, 0.5, 1234);
  CHECK(count_used(after) >= before);
}

TEST_CASE("rvq encode/decode on exact-match codebooks is the identity") {
  nsq::RvqStack stack;
  stack.stages.push_back(random_codebook(4, 3, 71));
  Eigen::VectorXd z = stack.stages[0].vectors.row(2).transpose();
  auto idx = nsq::rvq_encode(stack, z);
  REQUIRE(idx.size() == 1);
  CHECK(idx[0] == 2);
  CHECK((nsq::rvq_decode(stack, idx) - z).norm() == 0.0);
}

TEST_CASE("an all-zero second stage changes nothing") {
  nsq::RvqStack stack;
  stack.stages.push_back(random_codebook(4, 3, 81));
  stack.stages.push_back(nsq::make_codebook(1, 3));  // single zero vector
  Eigen::VectorXd z(3);
  z << 0.3, -0.7, 0.2;
  auto idx = nsq::rvq_encode(stack, z);
  nsq::RvqStack first_only;
  first_only.stages.push_back(stack.stages[0]);
  CHECK(nsq::rvq_decode(stack, idx) ==
        nsq::rvq_decode(first_only, std::vector<int>{idx[0]}));
}

TEST_CASE("telescoping: input minus decode equals the final residual") {
  nsq::RvqStack stack;
  for (std::uint64_t s = 0; s < 3; ++s) stack.stages.push_back(random_codebook(8, 4, 90 + s));
  nsq::SplitMix64 rng(95);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd z(4);
    for (int j = 0; j < 4; ++j) z[j] = rng.normal();
    auto idx = nsq::rvq_encode(stack, z);
    Eigen::VectorXd residual = z;
    for (int s = 0; s < 3; ++s)
      residual -= stack.stages[static_cast<std::size_t>(s)].vectors.row(idx[static_cast<std::size_t>(s)]).transpose();
    CHECK((z - nsq::rvq_decode(stack, idx) - residual).norm() <= 1e-14);
  }
}

TEST_CASE("refinement is monotone for data-trained stacks") {
  // Stage codebooks fitted to the residuals of the previous stage, the way the
  // cascade is meant to be built.
  Eigen::MatrixXd points = random_batch(100, 4, 101);
  nsq::RvqStack stack;
  Eigen::MatrixXd residuals = points;
  for (int s = 0; s < 3; ++s) {
    nsq::Codebook cb = nsq::kmeanspp_init(residuals, 8, 200 + static_cast<std::uint64_t>(s));
    cb.decay = 0.0;
    for (int lloyd = 0; lloyd < 4; ++lloyd) {
      std::vector<int> assign;
      for (int n = 0; n < residuals.rows(); ++n)
        assign.push_back(nsq::nearest(cb, residuals.row(n).transpose()));
      cb = nsq::ema_update(cb, residuals, assign);
    }
    stack.stages.push_back(cb);
    for (int n = 0; n < residuals.rows(); ++n) {
      int k = nsq::nearest(cb, residuals.row(n).transpose());
      residuals.row(n) -= cb.vectors.row(k);
    }
  }
  for (int n = 0; n < points.rows(); ++n) {
    Eigen::VectorXd z = points.row(n).transpose();
    auto idx = nsq::rvq_encode(stack, z);
    double prev = z.norm();
    for (int s = 1; s <= 3; ++s) {
      double err = (z - nsq::rvq_decode(stack, idx, s)).norm();
      CHECK(err <= prev + 1e-12);
      prev = err;
    }
  }
}

TEST_CASE("rvq rejects malformed input") {
  nsq::RvqStack stack;
  stack.stages.push_back(random_codebook(4, 3, 111));
  stack.stages.push_back(random_codebook(4, 3, 112));
  CHECK_THROWS_AS(nsq::rvq_decode(stack, std::vector<int>{0}), std::invalid_argument);
  CHECK_THROWS_AS(nsq::rvq_decode(stack, std::vector<int>{0, 9}), std::out_of_range);
  CHECK_THROWS_AS(nsq::rvq_encode(stack, Eigen::VectorXd::Zero(2)), std::invalid_argument);
  nsq::RvqStack empty;
  CHECK_THROWS_AS(nsq::rvq_encode(empty, Eigen::VectorXd::Zero(3)), std::invalid_argument);
}

TEST_CASE("bit accounting: Q stages of L vectors cost Q*ceil(log2 L) bits") {
  nsq::RvqStack stack;
  stack.stages.push_back(random_codebook(8, 2, 121));
  stack.stages.push_back(random_codebook(5, 2, 122));  // ceil(log2 5) = 3
  stack.stages.push_back(random_codebook(2, 2, 123));
  CHECK(nsq::rvq_bits_per_frame(stack) == 3 + 3 + 1);
}

TEST_CASE("codebook files round-trip") {
  nsq::Codebook cb = random_codebook(6, 4, 131);
  auto path = std::filesystem::temp_directory_path() / "nsq_test_codebook.bin";
  nsq::save_codebook(path.string(), cb);
  nsq::Codebook loaded = nsq::load_codebook(path.string());
  CHECK(loaded.vectors == cb.vectors);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(nsq::load_codebook("/nonexistent/nsq_codebook.bin"), std::runtime_error);
}

TEST_CASE("kmeans++ seeding uses batch rows and is deterministic") {
  Eigen::MatrixXd batch = random_batch(32, 3, 141);
  nsq::Codebook a = nsq::kmeanspp_init(batch, 5, 999);
  nsq::Codebook b = nsq::kmeanspp_init(batch, 5, 999);
  CHECK(a.vectors == b.vectors);
  for (int l = 0; l < a.size(); ++l) {
    bool from_batch = false;
    for (int n = 0; n < batch.rows(); ++n)
      if (a.vectors.row(l) == batch.row(n)) from_batch = true;
    CHECK(from_batch);
  }
}
