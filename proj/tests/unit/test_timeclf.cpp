#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cfdrift/entropy.hpp"
#include "cfdrift/errors.hpp"
#include "cfdrift/timeclf.hpp"

using namespace cfdrift;
using namespace cfdrift::timeclf;

namespace {

// E[i(C/5)] for C ~ Binomial(5, 1/2), enumerated with a hand-written
// binary entropy. This is the k = 5 estimate on data without drift.
double knn_noise_floor() {
  double e = 0.0;
  for (int c = 0; c <= 5; ++c) {
    const double p = c / 5.0;
    double h = 0.0;
    if (p > 0.0 && p < 1.0) h = -(p * std::log(p) + (1 - p) * std::log(1 - p));
    const double binom = std::tgamma(6.0) / (std::tgamma(c + 1.0) * std::tgamma(6.0 - c));
    e += binom / 32.0 * (1.0 - h / std::log(2.0));
  }
  return e;
}

Dataset two_blobs(std::size_t n_per, double gap, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix x(0, 2);
  std::vector<TimeBin> t;
  for (std::size_t i = 0; i < 2 * n_per; ++i) {
    const bool second = i >= n_per;
    const double row[2] = {z(rng) + (second ? gap : 0.0), z(rng)};
    x.append_row(row);
    t.push_back(TimeBin{second ? 2 : 1});
  }
  return Dataset(std::move(x), std::move(t), 2);
}

}  // namespace

TEST(Knn, NoiseFloorOracle) { EXPECT_NEAR(knn_noise_floor(), 0.168, 1e-3); }

TEST(Knn, NoDriftEstimateSitsAtNoiseFloor) {
  const auto data = two_blobs(2000, 0.0, 1);
  const auto clf = fit_knn(data);
  const auto est = estimate_identifiability(*clf, data.features());
  EXPECT_NEAR(mean_identifiability(est), knn_noise_floor(), 0.02);
}

TEST(Knn, DisjointSupportsAreFullyIdentifiable) {
  const auto data = two_blobs(300, 100.0, 2);
  const auto clf = fit_knn(data);
  const auto est = estimate_identifiability(*clf, data.features());
  EXPECT_DOUBLE_EQ(mean_identifiability(est), 1.0);
}

TEST(Knn, PosteriorIsNeighbourFrequency) {
  Matrix x(1, std::vector<double>{0, 1, 2, 3, 4, 5});
  const Dataset d(x, {TimeBin{1}, TimeBin{1}, TimeBin{2}, TimeBin{2}, TimeBin{2}, TimeBin{1}}, 2);
  KnnClassifier clf(d, {.k = 3});
  const double q[1] = {2.1};
  const auto p = clf.predict_posterior(q);
  EXPECT_DOUBLE_EQ(p[0], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(p[1], 2.0 / 3.0);
}

TEST(Knn, DistanceTiesGoToLowerIndex) {
  Matrix x(1, std::vector<double>{1, -1, 1, -1});
  const Dataset d(x, {TimeBin{1}, TimeBin{2}, TimeBin{2}, TimeBin{1}}, 2);
  KnnClassifier clf(d, {.k = 2});
  const double q[1] = {0.0};
  EXPECT_EQ(clf.neighbours(q), (std::vector<std::size_t>{0, 1}));
}

TEST(Knn, ManhattanMetricChangesNeighbour) {
  // From the origin: L1 distances 2.2 vs 3.0, squared L2 4.84 vs 4.5.
  Matrix y(2, std::vector<double>{0, 2.2, 1.5, 1.5});
  const Dataset e(y, {TimeBin{1}, TimeBin{2}}, 2);
  KnnClassifier l1(e, {.k = 1, .metric = KnnMetric::Manhattan});
  KnnClassifier l2(e, {.k = 1});
  const double q[2] = {0, 0};
  EXPECT_EQ(l1.neighbours(q).front(), 0u);
  EXPECT_EQ(l2.neighbours(q).front(), 1u);
}

TEST(Knn, Validation) {
  const auto d = two_blobs(2, 1.0, 0);
  EXPECT_THROW(fit_knn(d, {.k = 0}), ValidationError);
  EXPECT_THROW(fit_knn(d, {.k = 5}), ValidationError);
  const auto clf = fit_knn(d, {.k = 3});
  const double q[3] = {0, 0, 0};
  EXPECT_THROW(clf->predict_posterior(q), ValidationError);
}

TEST(Forest, SeparableDataGivesPointMasses) {
  const auto data = two_blobs(200, 50.0, 3);
  const auto rf = fit_random_forest(data, {.seed = 1});
  EXPECT_EQ(rf->n_trees(), 10u);
  const double left[2] = {0.0, 0.0}, right[2] = {50.0, 0.0};
  EXPECT_DOUBLE_EQ(rf->predict_posterior(left)[0], 1.0);
  EXPECT_DOUBLE_EQ(rf->predict_posterior(right)[1], 1.0);
}

TEST(Forest, PosteriorIsMeanOfTreeLeaves) {
  const auto data = two_blobs(200, 1.0, 4);
  const auto rf = fit_random_forest(data, {.seed = 7});
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z(0.5, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double q[2] = {z(rng), z(rng)};
    const auto trees = rf->tree_posteriors(q);
    double m0 = 0.0;
    for (const auto& t : trees) {
      EXPECT_NEAR(t[0] + t[1], 1.0, 1e-12);
      m0 += t[0];
    }
    EXPECT_NEAR(rf->predict_posterior(q)[0], m0 / static_cast<double>(trees.size()), 1e-12);
  }
}

TEST(Forest, DeterministicPerSeed) {
  const auto data = two_blobs(150, 1.0, 5);
  const auto a = fit_random_forest(data, {.seed = 3});
  const auto b = fit_random_forest(data, {.seed = 3});
  const auto c = fit_random_forest(data, {.seed = 4});
  const auto ea = estimate_identifiability(*a, data.features());
  EXPECT_EQ(ea, estimate_identifiability(*b, data.features()));
  EXPECT_NE(ea, estimate_identifiability(*c, data.features()));
}

TEST(Forest, DepthLimitProducesShallowTrees) {
  const auto data = two_blobs(150, 0.5, 6);
  const auto stump = fit_random_forest(data, {.n_trees = 5, .max_depth = 0, .seed = 1});
  // Depth 0 means every tree is a single leaf holding its bootstrap class shares.
  const double q[2] = {0.0, 0.0}, r[2] = {5.0, 5.0};
  EXPECT_EQ(stump->predict_posterior(q).probabilities()[0], stump->predict_posterior(r).probabilities()[0]);
}

TEST(Mse, ValidatesLengths) {
  const std::vector<double> a{0.0, 1.0}, b{1.0, 1.0}, c{0.5};
  EXPECT_DOUBLE_EQ(identifiability_mse(a, b), 0.5);
  EXPECT_THROW(identifiability_mse(a, c), ValidationError);
  EXPECT_THROW(identifiability_mse(std::span<const double>{}, std::span<const double>{}), ValidationError);
}
