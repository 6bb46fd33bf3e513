#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "cfdrift/entropy.hpp"
#include "cfdrift/errors.hpp"
#include "cfdrift/pipeline.hpp"
#include "cfdrift/synth.hpp"

using namespace cfdrift;
using namespace cfdrift::pipeline;

namespace {

Matrix gaussian_stream(const std::vector<std::pair<std::size_t, std::vector<double>>>& segments, double sd,
                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, sd);
  const std::size_t d = segments.front().second.size();
  Matrix x(0, d);
  std::vector<double> row(d);
  for (const auto& [n, mean] : segments) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) row[j] = mean[j] + z(rng);
      x.append_row(row);
    }
  }
  return x;
}

StreamConfig oracle_config(std::vector<std::size_t> cps, std::uint64_t seed = 1) {
  StreamConfig cfg;
  cfg.detector.kind = DetectorConfig::Kind::Oracle;
  cfg.detector.change_points = std::move(cps);
  cfg.seed = seed;
  return cfg;
}

std::vector<std::size_t> firing_positions(DriftDetector& det, const Matrix& x) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (det.observe(x.row(i))) out.push_back(i);
  }
  return out;
}

}  // namespace

TEST(OracleDetector, FiresExactlyAtPositions) {
  const Matrix x(300, 1, 0.0);
  OracleDetector one({100});
  EXPECT_EQ(firing_positions(one, x), (std::vector<std::size_t>{100}));
  OracleDetector none({});
  EXPECT_TRUE(firing_positions(none, x).empty());
  OracleDetector two({50, 200});
  EXPECT_EQ(firing_positions(two, x), (std::vector<std::size_t>{50, 200}));
  two.reset();
  EXPECT_EQ(firing_positions(two, x), (std::vector<std::size_t>{50, 200}));
  EXPECT_THROW(OracleDetector({5, 5}), ValidationError);
  EXPECT_THROW(OracleDetector({0}), ValidationError);
}

TEST(WindowDetector, ConstantStreamNeverFires) {
  WindowMeanDetector det(100, 4.0);
  EXPECT_TRUE(firing_positions(det, Matrix(1000, 3, 2.5)).empty());
}

TEST(WindowDetector, InfiniteThresholdNeverFires) {
  WindowMeanDetector det(20, std::numeric_limits<double>::infinity());
  const auto x = gaussian_stream({{200, {0.0}}, {200, {1000.0}}}, 1.0, 3);
  EXPECT_TRUE(firing_positions(det, x).empty());
}

TEST(WindowDetector, JumpDetectedWithinOneWindow) {
  const auto x = gaussian_stream({{500, {0.0}}, {500, {10.0}}}, 1.0, 4);
  WindowMeanDetector det(100, 4.0);
  const auto fired = firing_positions(det, x);
  ASSERT_FALSE(fired.empty());
  EXPECT_GE(fired.front(), 500u);
  EXPECT_LT(fired.front(), 600u);
}

TEST(WindowDetector, StatisticMatchesDirectComputation) {
  // Halves {0,0,0,1} and {1,1,2,2}: means .25 and 1.5, sample variances
  // .25 and 1/3, z = 1.25 / sqrt((.25 + 1/3) / 4).
  const Matrix x(1, std::vector<double>{0, 0, 0, 1, 1, 1, 2, 2});
  WindowMeanDetector det(8, 1e9);
  firing_positions(det, x);
  EXPECT_NEAR(det.last_statistic(), 1.25 / std::sqrt((0.25 + 1.0 / 3.0) / 4.0), 1e-12);
}

TEST(WindowDetector, RefractoryAfterFiring) {
  const auto x = gaussian_stream({{300, {0.0}}, {300, {10.0}}, {300, {20.0}}}, 1.0, 5);
  WindowMeanDetector det(60, 4.0);
  const auto fired = firing_positions(det, x);
  ASSERT_GE(fired.size(), 2u);
  for (std::size_t i = 1; i < fired.size(); ++i) EXPECT_GE(fired[i] - fired[i - 1], 59u);
}

TEST(ExplainStream, NoDetectionNoReports) {
  const auto x = gaussian_stream({{200, {0.0, 0.0}}}, 1.0, 1);
  EXPECT_TRUE(explain_stream(x, oracle_config({})).empty());
}

TEST(ExplainStream, TwoChangePointsGiveTwoReportsAndThreeBins) {
  const auto x = gaussian_stream({{100, {0.0, 0.0}}, {100, {5.0, 0.0}}, {100, {5.0, 5.0}}}, 1.0, 2);
  const auto reports = explain_stream(x, oracle_config({100, 200}));
  ASSERT_EQ(reports.size(), 2u);
  EXPECT_EQ(reports[0].event, 0u);
  EXPECT_EQ(reports[0].change_point, 100u);
  EXPECT_EQ(reports[0].n_bins, 2);
  EXPECT_EQ(reports[0].n_archived, 200u);
  EXPECT_EQ(reports[1].n_bins, 3);
  EXPECT_EQ(reports[1].n_archived, 300u);
  EXPECT_EQ(reports[1].associations.size(), 3u);
}

TEST(ExplainStream, TriggeringSampleOpensTheNewBin) {
  const auto x = gaussian_stream({{50, {0.0}}, {50, {9.0}}}, 1.0, 3);
  DriftExplainer ex(oracle_config({50}));
  for (std::size_t i = 0; i < x.rows(); ++i) EXPECT_FALSE(ex.observe(x.row(i)).has_value());
  const auto snap = ex.snapshot();
  EXPECT_EQ(snap.data.bin(49), TimeBin{1});
  EXPECT_EQ(snap.data.bin(50), TimeBin{2});
  ASSERT_TRUE(ex.finish().has_value());
  EXPECT_FALSE(ex.finish().has_value());
}

TEST(ExplainStream, ReportsReferenceOnlyArchivedSamples) {
  const auto x = gaussian_stream({{120, {0.0, 0.0}}, {80, {3.0, -2.0}}}, 1.0, 4);
  const auto reports = explain_stream(x, oracle_config({120}));
  ASSERT_EQ(reports.size(), 1u);
  const auto& r = reports[0];
  auto check = [&](const ReportSample& s) {
    const auto row = x.row(s.stream_position);
    EXPECT_TRUE(std::equal(row.begin(), row.end(), s.x.begin(), s.x.end()));
    EXPECT_EQ(s.bin, TimeBin{s.stream_position < 120 ? 1 : 2});
    EXPECT_GE(s.i_value, 0.0);
    EXPECT_LE(s.i_value, 1.0);
  };
  for (const auto& c : r.characteristic) check(c);
  for (const auto& a : r.associations) {
    for (const auto& p : a.pairs) {
      check(p.associated);
      const auto& c = r.characteristic.at(p.characteristic);
      for (std::size_t j = 0; j < c.x.size(); ++j) EXPECT_DOUBLE_EQ(p.difference[j], p.associated.x[j] - c.x[j]);
    }
  }
}

TEST(ExplainStream, DeterministicGivenSeed) {
  const auto x = gaussian_stream({{150, {0.0, 0.0}}, {150, {2.0, 1.0}}}, 1.0, 5);
  for (auto method : {proto::Method::KMeansResampled, proto::Method::MeanShift, proto::Method::AffinityPropagation}) {
    auto cfg = oracle_config({150}, 77);
    cfg.method = method;
    cfg.classifier.kind = ClassifierConfig::Kind::RandomForest;
    const auto a = explain_stream(x, cfg);
    const auto b = explain_stream(x, cfg);
    ASSERT_EQ(a.size(), 1u);
    ASSERT_EQ(a[0].characteristic.size(), b[0].characteristic.size());
    for (std::size_t k = 0; k < a[0].characteristic.size(); ++k) {
      EXPECT_EQ(a[0].characteristic[k].archive_index, b[0].characteristic[k].archive_index);
      EXPECT_EQ(a[0].characteristic[k].i_value, b[0].characteristic[k].i_value);
    }
    EXPECT_EQ(a[0].mean_identifiability, b[0].mean_identifiability);
  }
}

TEST(ExplainStream, GmmCharacteristicSamplesAreEnrichedInIdentifiableRegions) {
  // Averaged over mixtures, analytic i at the characteristic samples clearly
  // exceeds its mean over the stream.
  double stream_mean = 0.0, char_mean = 0.0;
  const std::uint64_t seeds[] = {3, 4, 5, 6, 7};
  for (auto seed : seeds) {
    synth::GmmSpec spec;
    spec.seed = seed;
    const auto model = synth::make_model(spec);
    Rng rng(8);
    const auto sampled = model.sample(600, rng);
    Matrix x(0, 2);
    std::size_t cp = 0;
    for (int b = 1; b <= 2; ++b) {
      for (auto i : sampled.indices_in_bin(TimeBin{b})) x.append_row(sampled.x(i));
      if (b == 1) cp = x.rows();
    }
    const auto reports = explain_stream(x, oracle_config({cp}, 4));
    ASSERT_EQ(reports.size(), 1u);
    double s = 0.0, c = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) s += model.identifiability(x.row(i));
    for (const auto& ch : reports[0].characteristic) c += model.identifiability(ch.x);
    stream_mean += s / static_cast<double>(x.rows()) / 5.0;
    char_mean += c / static_cast<double>(reports[0].characteristic.size()) / 5.0;
  }
  EXPECT_GT(char_mean, stream_mean + 0.1) << char_mean << " vs " << stream_mean;
}

TEST(ExplainStream, NoDriftMeanIdentifiabilityBelowNoiseFloorBound) {
  const auto x = gaussian_stream({{400, {0.0, 0.0}}, {400, {0.0, 0.0}}}, 1.0, 6);
  const auto reports = explain_stream(x, oracle_config({400}));
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_LE(reports[0].mean_identifiability, 0.25);
}

TEST(ExplainStream, DimensionChangeIsRejectedWithPosition) {
  DriftExplainer ex(oracle_config({}));
  const double a[2] = {0, 0}, b[3] = {0, 0, 0};
  ex.observe(a);
  EXPECT_THROW(ex.observe(b), ValidationError);
  const double nan[2] = {NAN, 0};
  EXPECT_THROW(ex.observe(nan), ValidationError);
}

TEST(ExplainStream, ErrorsCarryStreamPosition) {
  // k exceeds the archive size, so the explanation at the final flush fails.
  const auto x = gaussian_stream({{3, {0.0}}, {3, {5.0}}}, 1.0, 7);
  auto cfg = oracle_config({3});
  cfg.classifier.knn.k = 10;
  try {
    explain_stream(x, cfg);
    FAIL() << "expected StreamError";
  } catch (const StreamError& e) {
    EXPECT_EQ(e.position(), 6u);
  }
}

TEST(ExplainStream, ReservoirCapBoundsEveryBin) {
  const auto x = gaussian_stream({{500, {0.0}}, {300, {4.0}}}, 1.0, 8);
  auto cfg = oracle_config({500});
  cfg.archive_cap_per_bin = 64;
  DriftExplainer ex(cfg);
  for (std::size_t i = 0; i < x.rows(); ++i) ex.observe(x.row(i));
  const auto snap = ex.snapshot();
  EXPECT_EQ(snap.data.bin_counts(), (std::vector<std::size_t>{64, 64}));
  for (std::size_t i = 0; i < snap.data.size(); ++i) {
    EXPECT_EQ(snap.data.x(i)[0], x(snap.stream_positions[i], 0));
  }
  EXPECT_TRUE(ex.finish().has_value());
}

TEST(ExplainStream, StandardizationKeepsRawVectorsInReport) {
  auto x = gaussian_stream({{150, {0.0, 0.0}}, {150, {0.0, 3.0}}}, 1.0, 9);
  for (std::size_t i = 0; i < x.rows(); ++i) x(i, 0) *= 1000.0;
  auto cfg = oracle_config({150});
  cfg.standardize = true;
  const auto reports = explain_stream(x, cfg);
  ASSERT_EQ(reports.size(), 1u);
  for (const auto& c : reports[0].characteristic) EXPECT_EQ(c.x[0], x(c.stream_position, 0));
  ASSERT_FALSE(reports[0].feature_summary.empty());
}

TEST(Summary, AllZeroDifferencesAreNoDrift) {
  ExplanationReport r;
  r.dimension = 3;
  r.feature_range = {1.0, 1.0, 0.0};
  r.characteristic.push_back({0, 0, TimeBin{1}, 1.0, {0, 0, 0}});
  r.associations.push_back({TimeBin{2}, 0.0, {ReportPair{0, {5, 5, TimeBin{2}, 1.0, {0, 0, 0}}, 0.0, {0, 0, 0}}}});
  const auto s = summarize_report(r);
  ASSERT_EQ(s.size(), 3u);
  for (const auto& f : s) EXPECT_TRUE(f.no_drift);
}

TEST(Summary, InjectedShiftRanksFirst) {
  // Feature 3 shifts by +8 after the change point; the others do not move.
  std::mt19937_64 rng(10);
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix x(0, 5);
  for (std::size_t i = 0; i < 600; ++i) {
    std::vector<double> row(5);
    for (auto& v : row) v = z(rng);
    if (i >= 300) row[3] += 8.0;
    x.append_row(row);
  }
  const auto reports = explain_stream(x, oracle_config({300}, 11));
  ASSERT_EQ(reports.size(), 1u);
  const auto& s = reports[0].feature_summary;
  ASSERT_EQ(s.size(), 5u);
  EXPECT_EQ(s.front().feature, 3u);
  EXPECT_FALSE(s.front().no_drift);
  for (std::size_t k = 1; k < s.size(); ++k) EXPECT_LT(s[k].mean_abs_difference, s.front().mean_abs_difference);
}

TEST(Summary, NoCrossBinPairsGivesEmptyRanking) {
  ExplanationReport r;
  r.dimension = 1;
  r.feature_range = {1.0};
  r.characteristic.push_back({0, 0, TimeBin{1}, 1.0, {0}});
  r.associations.push_back({TimeBin{1}, 0.0, {ReportPair{0, {0, 0, TimeBin{1}, 1.0, {0}}, 0.0, {0}}}});
  EXPECT_TRUE(summarize_report(r).empty());
}
