#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "cfdrift/errors.hpp"
#include "cfdrift/proto.hpp"

using namespace cfdrift;
using namespace cfdrift::proto;

namespace {

// Textbook affinity propagation with explicit maxima, fixed iteration count.
std::vector<std::size_t> reference_affinity(const Matrix& pts, double damping, int iters) {
  const std::size_t n = pts.rows();
  std::vector<std::vector<double>> s(n, std::vector<double>(n)), r = s, a = s;
  std::vector<double> off;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      double d = 0.0;
      for (std::size_t j = 0; j < pts.cols(); ++j) d += (pts(i, j) - pts(k, j)) * (pts(i, j) - pts(k, j));
      s[i][k] = -d;
      if (i != k) off.push_back(-d);
    }
  }
  std::sort(off.begin(), off.end());
  const double pref = off.size() % 2 ? off[off.size() / 2] : 0.5 * (off[off.size() / 2 - 1] + off[off.size() / 2]);
  for (std::size_t i = 0; i < n; ++i) s[i][i] = pref;
  for (int it = 0; it < iters; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        double m = -INFINITY;
        for (std::size_t kk = 0; kk < n; ++kk) {
          if (kk != k) m = std::max(m, a[i][kk] + s[i][kk]);
        }
        r[i][k] = damping * r[i][k] + (1 - damping) * (s[i][k] - m);
      }
    }
    auto old = a;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        double sum = 0.0;
        for (std::size_t ii = 0; ii < n; ++ii) {
          if (ii != i && ii != k) sum += std::max(0.0, r[ii][k]);
        }
        const double fresh = i == k ? sum : std::min(0.0, r[k][k] + sum);
        a[i][k] = damping * old[i][k] + (1 - damping) * fresh;
      }
    }
  }
  std::vector<std::size_t> ex;
  for (std::size_t k = 0; k < n; ++k) {
    if (a[k][k] + r[k][k] > 0) ex.push_back(k);
  }
  return ex;
}

Matrix blobs(std::size_t per, const std::vector<std::pair<double, double>>& centres, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, sd);
  Matrix x(0, 2);
  for (const auto& [cx, cy] : centres) {
    for (std::size_t i = 0; i < per; ++i) {
      const double row[2] = {cx + z(rng), cy + z(rng)};
      x.append_row(row);
    }
  }
  return x;
}

std::vector<std::vector<double>> sorted_rows(const Matrix& m) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < m.rows(); ++i) rows.emplace_back(m.row(i).begin(), m.row(i).end());
  std::sort(rows.begin(), rows.end());
  return rows;
}

}  // namespace

TEST(Resample, FrequenciesFollowWeights) {
  const std::vector<double> w{0.0, 1.0, 3.0, 0.5, 0.5};
  const std::size_t m = 200000;
  const auto idx = weighted_resample(w, m, 4);
  std::vector<double> freq(w.size(), 0.0);
  for (auto i : idx) freq[i] += 1.0 / m;
  EXPECT_EQ(freq[0], 0.0);
  for (std::size_t k = 1; k < w.size(); ++k) EXPECT_NEAR(freq[k], w[k] / 5.0, 4.0 / std::sqrt(m));
}

TEST(Resample, AllZeroWeightsFallBackToUniform) {
  const std::vector<double> w(4, 0.0);
  const std::size_t m = 100000;
  std::vector<double> freq(4, 0.0);
  for (auto i : weighted_resample(w, m, 1)) freq[i] += 1.0 / m;
  for (double f : freq) EXPECT_NEAR(f, 0.25, 4.0 / std::sqrt(m));
}

TEST(Resample, DeterministicAndValidated) {
  const std::vector<double> w{1.0, 2.0, 3.0};
  EXPECT_EQ(weighted_resample(w, 50, 9), weighted_resample(w, 50, 9));
  EXPECT_THROW(weighted_resample(std::vector<double>{1.0, -1.0}, 5, 0), ValidationError);
  EXPECT_THROW(weighted_resample(std::vector<double>{}, 5, 0), ValidationError);
  EXPECT_THROW(weighted_resample(w, 0, 0), ValidationError);
}

TEST(KMeans, RecoversSeparatedCentres) {
  const auto x = blobs(100, {{0, 0}, {20, 0}, {0, 20}}, 0.5, 1);
  const auto r = kmeans(x, 3, {}, {.seed = 5});
  EXPECT_TRUE(r.converged);
  auto c = sorted_rows(r.prototypes.points);
  EXPECT_NEAR(c[0][0], 0.0, 0.2);
  EXPECT_NEAR(c[0][1], 0.0, 0.2);
  EXPECT_NEAR(c[1][1], 20.0, 0.2);
  EXPECT_NEAR(c[2][0], 20.0, 0.2);
}

TEST(KMeans, InertiaNeverIncreases) {
  const auto x = blobs(60, {{0, 0}, {3, 1}, {1, 4}, {5, 5}}, 1.5, 2);
  const auto r = kmeans(x, 6, {}, {.seed = 3});
  for (std::size_t i = 1; i < r.inertia_history.size(); ++i) {
    EXPECT_LE(r.inertia_history[i], r.inertia_history[i - 1] + 1e-9);
  }
}

TEST(KMeans, IntegerWeightsEqualExpandedData) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> coord(-20, 20), mult(0, 3);
  Matrix x(0, 2), expanded(0, 2);
  std::vector<double> w;
  for (int i = 0; i < 40; ++i) {
    const double row[2] = {static_cast<double>(coord(rng)), static_cast<double>(coord(rng))};
    const int k = mult(rng);
    x.append_row(row);
    w.push_back(k);
    for (int j = 0; j < k; ++j) expanded.append_row(row);
  }
  const auto weighted = kmeans(x, 4, w, {.seed = 11});
  const auto plain = kmeans(expanded, 4, {}, {.seed = 11});
  ASSERT_EQ(weighted.prototypes.points.rows(), plain.prototypes.points.rows());
  const auto a = sorted_rows(weighted.prototypes.points), b = sorted_rows(plain.prototypes.points);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(a[i][j], b[i][j], 1e-9);
  }
}

TEST(KMeans, Validation) {
  const Matrix x(3, 2, 0.0);
  EXPECT_THROW(kmeans(x, 0), ValidationError);
  EXPECT_THROW(kmeans(x, 4), ValidationError);
  EXPECT_NO_THROW(kmeans(x, 2));  // duplicates: empty clusters get reseeded
}

TEST(MeanShift, HandIteratedModes) {
  // h = 0.5: the pair {0, 0.1} pulls together at 0.05 (the kernel weight of 5
  // is e^-50), and 5 stays alone.
  const Matrix x(1, std::vector<double>{0.0, 0.1, 5.0});
  const auto r = mean_shift(x, {.bandwidth = 0.5, .tolerance = 1e-9});
  ASSERT_EQ(r.prototypes.points.rows(), 2u);
  auto modes = sorted_rows(r.prototypes.points);
  EXPECT_NEAR(modes[0][0], 0.05, 1e-6);
  EXPECT_NEAR(modes[1][0], 5.0, 1e-6);
}

TEST(MeanShift, MedianBandwidthDefault) {
  const Matrix x(1, std::vector<double>{0.0, 1.0, 3.0});
  EXPECT_DOUBLE_EQ(median_pairwise_distance(x), 2.0);
  EXPECT_DOUBLE_EQ(mean_shift(x).bandwidth, 2.0);
}

TEST(MeanShift, IdenticalPointsGiveOneMode) {
  const Matrix x(2, std::vector<double>{1, 1, 1, 1, 1, 1});
  const auto r = mean_shift(x);
  ASSERT_EQ(r.prototypes.points.rows(), 1u);
  EXPECT_EQ(r.prototypes.points(0, 0), 1.0);
}

TEST(Affinity, MatchesTextbookReference) {
  const Matrix x(2, std::vector<double>{0, 0, 0.3, 0.1, 5, 5, 5.2, 4.9, 10, 0});
  const auto r = affinity_propagation(x, {});
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.exemplars, reference_affinity(x, 0.5, 400));
}

TEST(Affinity, RandomSetsMatchReference) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto x = blobs(4, {{0, 0}, {6, 0}, {0, 6}}, 0.7, seed);
    const auto r = affinity_propagation(x, {.max_iter = 1000, .convergence_iter = 50});
    if (!r.converged) continue;
    EXPECT_EQ(r.exemplars, reference_affinity(x, 0.5, 1000)) << "seed " << seed;
  }
}

TEST(Methods, NamesRoundTrip) {
  for (auto m : {Method::KMeansResampled, Method::KMeansWeighted, Method::KMeansBaseline, Method::MeanShift,
                 Method::AffinityPropagation}) {
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
  EXPECT_EQ(parse_method("ap"), Method::AffinityPropagation);
  EXPECT_THROW(parse_method("dbscan"), ValidationError);
}

TEST(Characteristic, SamplesAreDistinctDatasetMembers) {
  const auto x = blobs(50, {{0, 0}, {8, 8}}, 1.0, 3);
  std::vector<TimeBin> t;
  std::vector<double> w;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    t.push_back(TimeBin{i < 50 ? 1 : 2});
    w.push_back(i % 3 == 0 ? 1.0 : 0.1);
  }
  const Dataset d(x, t, 2);
  for (auto m : {Method::KMeansResampled, Method::KMeansWeighted, Method::KMeansBaseline, Method::MeanShift,
                 Method::AffinityPropagation}) {
    const auto r = find_characteristic_samples(d, w, {.method = m, .k = 6, .seed = 2});
    ASSERT_FALSE(r.samples.empty());
    std::set<std::size_t> seen;
    for (const auto& s : r.samples) {
      EXPECT_TRUE(seen.insert(s.index).second);
      EXPECT_EQ(s.sample.x, d.sample(s.index).x);
      EXPECT_EQ(s.sample.t, d.bin(s.index));
      EXPECT_EQ(s.i_value, w[s.index]);
    }
  }
}

TEST(Characteristic, WeightsSteerPrototypesTowardIdentifiableRegion) {
  const auto x = blobs(100, {{0, 0}, {10, 0}}, 1.0, 4);
  std::vector<TimeBin> t;
  std::vector<double> w;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    t.push_back(TimeBin{i % 2 ? 2 : 1});
    w.push_back(i < 100 ? 0.0 : 1.0);
  }
  const Dataset d(x, t, 2);
  const auto r = find_characteristic_samples(d, w, {.method = Method::KMeansResampled, .k = 4, .seed = 1});
  for (const auto& s : r.samples) EXPECT_GE(s.index, 100u);
}

TEST(Snap, NearestMemberLowestIndexOnTies) {
  const Matrix x(1, std::vector<double>{0.0, 2.0, 4.0});
  const double p[1] = {1.0};
  EXPECT_EQ(snap_to_data(x, p), 0u);
  const double q[1] = {3.9};
  EXPECT_EQ(snap_to_data(x, q), 2u);
}
