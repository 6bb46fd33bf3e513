#include <gtest/gtest.h>

#include <atomic>
#include <bit>
#include <cmath>
#include <random>
#include <sstream>

#include "cfdrift/errors.hpp"
#include "cfdrift/evalharness.hpp"
#include "cfdrift/io.hpp"

using namespace cfdrift;
using namespace cfdrift::eval;

namespace {

// Mean |F Δ G| / N over every f-subset F of N cells, G = {0..g-1}.
double enumerated_baseline(int f, int g, int n) {
  double total = 0.0, count = 0.0;
  const unsigned changed = (1u << g) - 1u;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) != f) continue;
    total += static_cast<double>(std::popcount(mask ^ changed)) / n;
    count += 1.0;
  }
  return total / count;
}

// P(X >= w), X ~ Binomial(n, 1/2), by accumulating the pmf directly.
double binomial_tail(int w, int n) {
  double pmf = std::pow(0.5, n), tail = 0.0;
  for (int k = 0; k <= n; ++k) {
    if (k >= w) tail += pmf;
    pmf = pmf * (n - k) / (k + 1);
  }
  return tail;
}

ExperimentGrid small_grid() {
  ExperimentGrid g;
  g.runs = 3;
  g.n_train = 200;
  g.n_eval = 100;
  g.seed = 5;
  g.threads = 1;
  return g;
}

}  // namespace

TEST(GmmConfig, ParseAndLabel) {
  const auto c = GmmConfig::parse("100/8/2");
  EXPECT_EQ(c, (GmmConfig{100, 8, 2}));
  EXPECT_EQ(c.label(), "100/8/2");
  EXPECT_THROW(GmmConfig::parse("2/2"), ValidationError);
  EXPECT_THROW(GmmConfig::parse("2/x/2"), ValidationError);
  EXPECT_THROW(GmmConfig::parse("2/2/1"), ValidationError);
  EXPECT_THROW(GmmConfig::parse("0/2/2"), ValidationError);
}

TEST(Models, NamesRoundTrip) {
  EXPECT_EQ(parse_model(to_string(Model::Knn)), Model::Knn);
  EXPECT_EQ(parse_model(to_string(Model::RandomForest)), Model::RandomForest);
  EXPECT_EQ(parse_model("random-forest"), Model::RandomForest);
  EXPECT_THROW(parse_model("svm"), ValidationError);
  EXPECT_EQ(parse_flag_rule(to_string(FlagRule::IMass)), FlagRule::IMass);
  EXPECT_EQ(parse_task("classification"), Task::Classification);
}

TEST(StatCell, MeanAndSampleStd) {
  const auto c = StatCell::from_values({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(c.mean, 2.5);
  EXPECT_DOUBLE_EQ(c.std, std::sqrt(5.0 / 3.0));
  EXPECT_EQ(c.runs, 4u);
  const auto one = StatCell::from_values({0.7});
  EXPECT_EQ(one.std, 0.0);
}

TEST(Scoring, CellScoreExamples) {
  const std::vector<int> changed{0, 8};
  EXPECT_DOUBLE_EQ(cell_score(changed, changed, 9), 0.0);
  const std::vector<int> off{1, 2, 3, 4, 5, 6, 7};
  EXPECT_DOUBLE_EQ(cell_score(off, changed, 9), 1.0);
  const std::vector<int> partial{0, 4};
  EXPECT_DOUBLE_EQ(cell_score(partial, changed, 9), 2.0 / 9.0);
}

TEST(Scoring, BaselineMatchesSubsetEnumeration) {
  for (int f = 0; f <= 9; ++f) {
    for (int g = 0; g <= 9; ++g) {
      EXPECT_NEAR(random_flagging_baseline(static_cast<std::size_t>(f), static_cast<std::size_t>(g), 9),
                  enumerated_baseline(f, g, 9), 1e-12)
          << f << "," << g;
    }
  }
}

TEST(Scoring, SignTestMatchesBinomialTail) {
  for (int n = 1; n <= 40; ++n) {
    for (int w = 0; w <= n; ++w) {
      const double want = binomial_tail(w, n);
      EXPECT_NEAR(sign_test_p_value(static_cast<std::size_t>(w), static_cast<std::size_t>(n - w)), want,
                  1e-12 + 1e-9 * want);
    }
  }
  EXPECT_EQ(sign_test_p_value(0, 0), 1.0);
}

TEST(ParallelFor, VisitsEveryIndexOnceAndRethrows) {
  std::vector<std::atomic<int>> hits(100);
  parallel_for(100, 4, [&](std::size_t i) { hits[i]++; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) {
                 if (i == 7) throw ValidationError("boom");
               }),
               ValidationError);
}

TEST(StableHash, KnownFnvValues) {
  EXPECT_EQ(stable_hash(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(stable_hash("a"), 0xaf63dc4c8601ec8cull);
}

TEST(Identifiability, DeterministicAndThreadIndependent) {
  auto g = small_grid();
  g.models = {Model::Knn, Model::RandomForest};
  const auto a = eval_identifiability(g);
  g.threads = 3;
  const auto b = eval_identifiability(g);
  ASSERT_EQ(a.rows.size(), 2u);
  ASSERT_EQ(b.rows.size(), 2u);
  for (std::size_t r = 0; r < a.rows.size(); ++r) {
    EXPECT_EQ(a.rows[r].cell.values, b.rows[r].cell.values);
    for (double v : a.rows[r].cell.values) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
  ASSERT_NE(a.find("2/2/2", "knn", "mse"), nullptr);
  EXPECT_EQ(a.find("2/2/2", "svm", "mse"), nullptr);
}

TEST(Identifiability, SeedChangesResults) {
  auto g = small_grid();
  const auto a = eval_identifiability(g);
  g.seed = 6;
  EXPECT_NE(a.rows[0].cell.values, eval_identifiability(g).rows[0].cell.values);
}

TEST(Prototypes, MetricsWithinRange) {
  auto g = small_grid();
  g.methods = {proto::Method::KMeansResampled, proto::Method::KMeansBaseline};
  const auto t = eval_prototypes(g);
  const auto* i_res = t.find("2/2/2", "kmeans-resampled", "mean_i");
  const auto* i_base = t.find("2/2/2", "kmeans-baseline", "mean_i");
  ASSERT_NE(i_res, nullptr);
  ASSERT_NE(i_base, nullptr);
  ASSERT_NE(t.find("2/2/2", "kmeans-resampled", "mean_c"), nullptr);
  for (double v : i_res->cell.values) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_GT(i_res->cell.mean, i_base->cell.mean);
}

TEST(Checkerboard, ScoresAndSignTest) {
  CheckerboardOptions o;
  o.runs = 4;
  o.threads = 2;
  o.seed = 3;
  const auto r = eval_checkerboard(o);
  ASSERT_EQ(r.sign_tests.size(), 1u);
  const auto& st = r.sign_tests[0];
  EXPECT_EQ(st.wins + st.losses + st.ties, 4u);
  const auto* score = r.table.find("3/2/150", "kmeans-resampled", "score");
  const auto* base = r.table.find("3/2/150", "kmeans-resampled", "baseline");
  ASSERT_NE(score, nullptr);
  ASSERT_NE(base, nullptr);
  std::size_t wins = 0;
  for (std::size_t i = 0; i < 4; ++i) wins += score->cell.values[i] < base->cell.values[i];
  EXPECT_EQ(wins, st.wins);
  o.threads = 1;
  EXPECT_EQ(eval_checkerboard(o).table.rows[0].cell.values, r.table.rows[0].cell.values);
}

TEST(Benchmark, RegressionAndValidation) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix x(400, 2);
  std::vector<double> y(400);
  for (std::size_t i = 0; i < 400; ++i) {
    x(i, 0) = z(rng);
    x(i, 1) = z(rng);
    y[i] = x(i, 0) + 0.1 * z(rng);
  }
  BenchmarkOptions o;
  o.runs = 2;
  o.threads = 1;
  const auto t = eval_benchmark(x, y, o, "toy");
  ASSERT_NE(t.find("toy", "knn", "mse"), nullptr);
  ASSERT_NE(t.find("toy", "rf", "mse"), nullptr);
  EXPECT_EQ(t.find("toy", "knn", "mse")->cell.runs, 2u);

  const std::vector<double> flat(400, 1.0);
  EXPECT_THROW(eval_benchmark(x, flat, o, "flat"), ValidationError);
  o.task = Task::Classification;
  EXPECT_THROW(eval_benchmark(x, y, o, "fractional"), ValidationError);
}

TEST(Results, RunsCsvReaggregatesExactly) {
  auto g = small_grid();
  const auto t = eval_identifiability(g);
  std::stringstream ss;
  io::write_runs_csv(ss, t);
  const auto back = io::read_runs_csv(ss);
  ASSERT_EQ(back.rows.size(), t.rows.size());
  EXPECT_EQ(back.experiment, t.experiment);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    EXPECT_EQ(back.rows[r].cell.values, t.rows[r].cell.values);
    EXPECT_EQ(back.rows[r].cell.mean, t.rows[r].cell.mean);
    EXPECT_EQ(back.rows[r].cell.std, t.rows[r].cell.std);
  }
}

TEST(Validation, GridRejectsBadSettings) {
  auto g = small_grid();
  g.runs = 0;
  EXPECT_THROW(eval_identifiability(g), ValidationError);
  g = small_grid();
  g.configs.clear();
  EXPECT_THROW(eval_identifiability(g), ValidationError);
  CheckerboardOptions o;
  o.n_bins = 1;
  EXPECT_THROW(eval_checkerboard(o), Error);
}
