#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "orthovar/kmeans.hpp"
#include "orthovar/metrics.hpp"

using namespace orthovar;
using namespace orthovar::clustering;

namespace {

Eigen::MatrixXd random_points(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = nd(gen);
  return x;
}

Eigen::MatrixXd blobs(const std::vector<Eigen::VectorXd>& centres, Eigen::Index per_blob, double sd,
                      std::uint64_t seed, std::vector<int>* labels) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, sd);
  const Eigen::Index d = centres.front().size();
  Eigen::MatrixXd x(per_blob * static_cast<Eigen::Index>(centres.size()), d);
  labels->clear();
  for (std::size_t c = 0; c < centres.size(); ++c) {
    for (Eigen::Index i = 0; i < per_blob; ++i) {
      Eigen::VectorXd p = centres[c];
      for (Eigen::Index j = 0; j < d; ++j) p[j] += nd(gen);
      x.row(static_cast<Eigen::Index>(labels->size())) = p.transpose();
      labels->push_back(static_cast<int>(c));
    }
  }
  return x;
}

}  // namespace

TEST(KMeans, k1_centroid_is_mean) {
  Eigen::MatrixXd x = random_points(40, 5, 1);
  auto r = kmeans(x, {1, 7});
  Eigen::VectorXd mean = x.colwise().mean().transpose();
  EXPECT_LE((r.centroids.row(0).transpose() - mean).norm(), 1e-9 * std::max(1.0, mean.norm()));
  EXPECT_NEAR(r.inertia, (x.rowwise() - mean.transpose()).squaredNorm(), 1e-9);
  EXPECT_TRUE(std::all_of(r.assignments.begin(), r.assignments.end(), [](int a) { return a == 0; }));
}

TEST(KMeans, k_equal_n_has_zero_inertia) {
  Eigen::MatrixXd x = random_points(9, 3, 2);
  auto r = kmeans(x, {9, 3});
  EXPECT_NEAR(r.inertia, 0.0, 1e-12);
  std::vector<int> sorted = r.assignments;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 9; ++i) EXPECT_EQ(sorted[static_cast<std::size_t>(i)], i);
}

TEST(KMeans, two_blobs_match_exhaustive_optimum) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::vector<int> planted;
    Eigen::MatrixXd x = blobs({Eigen::VectorXd::Zero(2), Eigen::VectorXd::Constant(2, 5.0)}, 6, 1.0, seed, &planted);
    std::vector<int> best;
    const double optimum = oracle::best_two_partition(x, &best);
    auto r = kmeans(x, {2, seed});
    EXPECT_NEAR(r.inertia, optimum, 1e-9 * optimum);
    EXPECT_TRUE(oracle::same_partition(r.assignments, best));
  }
}

TEST(KMeans, inertia_trace_non_increasing) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Eigen::MatrixXd x = random_points(80, 4, seed);
    auto r = kmeans(x, {6, seed});
    ASSERT_FALSE(r.inertia_trace.empty());
    for (std::size_t i = 1; i < r.inertia_trace.size(); ++i) {
      EXPECT_LE(r.inertia_trace[i], r.inertia_trace[i - 1] * (1 + 1e-12));
    }
    EXPECT_NEAR(r.inertia_trace.back(), r.inertia, 1e-9 * std::max(1.0, r.inertia));
  }
}

TEST(KMeans, no_empty_clusters) {
  Eigen::MatrixXd x = random_points(30, 2, 4);
  for (std::size_t k = 1; k <= 30; ++k) {
    auto r = kmeans(x, {k, 4});
    std::vector<int> sizes(k, 0);
    for (int a : r.assignments) ++sizes[static_cast<std::size_t>(a)];
    EXPECT_TRUE(std::all_of(sizes.begin(), sizes.end(), [](int s) { return s > 0; })) << "k=" << k;
  }
}

TEST(KMeans, seeded_runs_are_deterministic) {
  Eigen::MatrixXd x = random_points(60, 4, 5);
  auto a = kmeans(x, {4, 42});
  auto b = kmeans(x, {4, 42});
  EXPECT_EQ(a.assignments, b.assignments);
  EXPECT_EQ(a.inertia, b.inertia);
  EXPECT_TRUE(a.centroids == b.centroids);
}

TEST(KMeans, float_points) {
  Eigen::MatrixXf x = random_points(20, 3, 6).cast<float>();
  auto r = kmeans(x, {3, 1});
  EXPECT_EQ(r.assignments.size(), 20u);
  EXPECT_EQ(r.centroids.rows(), 3);
}

TEST(KMeans, rejects_bad_k) {
  Eigen::MatrixXd x = random_points(5, 2, 7);
  EXPECT_THROW(kmeans(x, {0, 1}), std::invalid_argument);
  EXPECT_THROW(kmeans(x, {6, 1}), std::invalid_argument);
  EXPECT_THROW(kmeans(Eigen::MatrixXd(0, 2), {1, 1}), std::invalid_argument);
}

TEST(KMeansSweep, one_result_per_k_independent_of_range) {
  Eigen::MatrixXd x = random_points(50, 3, 8);
  KMeansOptions base;
  base.seed = 9;
  auto all = kmeans_sweep(x, 1, 20, base);
  ASSERT_EQ(all.size(), 20u);
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i].k, i + 1);
  auto part = kmeans_sweep(x, 5, 7, base);
  for (std::size_t i = 0; i < part.size(); ++i) EXPECT_EQ(part[i].assignments, all[i + 4].assignments);
  EXPECT_THROW(kmeans_sweep(x, 3, 2, base), std::invalid_argument);
}

TEST(KMeans, recovers_three_blobs) {
  std::vector<Eigen::VectorXd> centres;
  for (int c = 0; c < 3; ++c) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(8);
    v[c] = 8.0;
    centres.push_back(v);
  }
  std::vector<int> planted;
  Eigen::MatrixXd x = blobs(centres, 20, 1.0, 3, &planted);
  auto r = kmeans(x, {3, 3});
  EXPECT_GE(metrics::adjusted_rand_index(r.assignments, planted), 0.95);
}

TEST(NormalizeRows, unit_rows_and_zero_rows) {
  Eigen::MatrixXd x(2, 2);
  x << 3, 4, 0, 0;
  auto n = normalize_rows(x);
  EXPECT_NEAR(n.row(0).norm(), 1.0, 1e-12);
  EXPECT_EQ(n.row(1).norm(), 0.0);
}
