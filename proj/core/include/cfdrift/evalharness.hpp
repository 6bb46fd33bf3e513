#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfdrift/proto.hpp"
#include "cfdrift/synth.hpp"
#include "cfdrift/timeclf.hpp"
#include "cfdrift/types.hpp"

namespace cfdrift::eval {

/// Mixture configuration written as "d/n_gauss_per_class/n_class".
struct GmmConfig {
  std::size_t d = 2;
  std::size_t n_gauss_per_class = 2;
  std::size_t n_class = 2;

  std::string label() const;
  static GmmConfig parse(std::string_view label);
  friend bool operator==(const GmmConfig&, const GmmConfig&) = default;
};

enum class Model { Knn, RandomForest };
std::string_view to_string(Model m) noexcept;
Model parse_model(std::string_view name);

struct ExperimentGrid {
  std::vector<GmmConfig> configs{{2, 2, 2}};
  std::vector<Model> models{Model::Knn};
  std::vector<proto::Method> methods{proto::Method::KMeansResampled};
  std::size_t runs = 30;
  std::size_t n_train = 500;
  std::size_t n_eval = 1500;  // per evaluation distribution
  double a = 10.0;
  double sigma = 1.0;
  std::size_t k = 10;  // k-means prototype count
  std::size_t m_draw = 0;
  timeclf::KnnConfig knn;
  timeclf::ForestConfig forest;  // seed is derived per run
  std::uint64_t seed = 0;
  std::size_t threads = 0;  // 0: hardware concurrency

  void validate() const;
};

/// Mean and sample standard deviation (0 for a single run) of per-run values.
struct StatCell {
  double mean = 0.0;
  double std = 0.0;
  std::size_t runs = 0;
  std::vector<double> values;

  static StatCell from_values(std::vector<double> values);
};

struct ResultRow {
  std::string config;
  std::string method;
  std::string metric;
  StatCell cell;
};

struct ResultTable {
  std::string experiment;
  std::vector<ResultRow> rows;

  /// Null when no row matches.
  const ResultRow* find(std::string_view config, std::string_view method, std::string_view metric) const;
};

/// Runs fn(0..n-1) on up to `threads` workers. Each index must write only
/// its own output slot; the first exception is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

/// Stable 64-bit FNV-1a hash, used to key seeds by configuration label.
std::uint64_t stable_hash(std::string_view s) noexcept;

/// MSE of estimated vs analytic identifiability. Each run trains on n_train
/// mixture samples and evaluates on n_eval points from the mixture, n_eval
/// from the same mixture with σ tripled, and n_eval uniform on [−a, a]^d.
/// Metric "mse".
ResultTable eval_identifiability(const ExperimentGrid& grid);

/// Prototype quality with analytic identifiability as resampling weights.
/// Metrics "mean_i" and "mean_c" (analytic values at the characteristic samples).
ResultTable eval_prototypes(const ExperimentGrid& grid);

enum class FlagRule {
  Presence,  // a cell is flagged iff a characteristic sample falls in it
  IMass,     // a cell is flagged iff its share of total estimated i exceeds 1/n_cells
};
std::string_view to_string(FlagRule r) noexcept;
FlagRule parse_flag_rule(std::string_view name);

struct CheckerboardOptions {
  std::size_t runs = 30;
  std::size_t n_per_bin = 150;
  int grid = 3;
  int n_bins = 2;
  std::vector<proto::Method> methods{proto::Method::KMeansResampled};
  Model model = Model::Knn;
  timeclf::KnnConfig knn;
  std::size_t prototypes_per_bin = 2;
  FlagRule rule = FlagRule::Presence;
  std::uint64_t seed = 0;
  std::size_t threads = 0;

  void validate() const;
};

/// |flagged Δ changed| / n_cells.
double cell_score(std::span<const int> flagged, std::span<const int> changed, int n_cells);

/// Expected score when f of n_cells cells are flagged uniformly at random and
/// g cells truly changed: (f + g − 2fg/N) / N.
double random_flagging_baseline(std::size_t f, std::size_t g, int n_cells);

/// One-sided sign test: P(X ≥ wins) for X ~ Binomial(wins + losses, ½).
/// Returns 1 when there are no untied runs.
double sign_test_p_value(std::size_t wins, std::size_t losses);

struct SignTest {
  std::size_t wins = 0;  // score strictly below baseline
  std::size_t losses = 0;
  std::size_t ties = 0;
  double p_value = 1.0;
};

struct CheckerboardResult {
  ResultTable table;  // metrics "score" and "baseline", config "grid/bins/n_per_bin"
  std::vector<SignTest> sign_tests;  // one per method, same order as options.methods
};

CheckerboardResult eval_checkerboard(const CheckerboardOptions& options);

enum class Task { Regression, Classification };
Task parse_task(std::string_view name);

struct BenchmarkOptions {
  Task task = Task::Regression;
  std::vector<Model> models{Model::Knn, Model::RandomForest};
  std::size_t runs = 30;
  timeclf::KnnConfig knn;
  timeclf::ForestConfig forest;
  std::uint64_t seed = 0;
  std::size_t threads = 0;

  void validate() const;
};

/// Relabels (x, y) with Bernoulli occurrence times, splits 50/50 and scores
/// the MSE of î on the test half. Metric "mse", config = `name`.
ResultTable eval_benchmark(const Matrix& x, std::span<const double> y, const BenchmarkOptions& options,
                           const std::string& name);

}  // namespace cfdrift::eval
