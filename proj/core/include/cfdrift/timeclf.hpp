#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "cfdrift/types.hpp"

namespace cfdrift::timeclf {

/// Probabilistic classifier h: x ↦ posterior over time bins. Fitted models
/// are immutable and safe to query concurrently.
class TimeClassifier {
 public:
  virtual ~TimeClassifier() = default;

  /// Throws ValidationError on a dimension mismatch.
  virtual TimePosterior predict_posterior(std::span<const double> x) const = 0;

  int n_bins() const noexcept { return n_bins_; }
  std::size_t dimension() const noexcept { return dim_; }

 protected:
  TimeClassifier(int n_bins, std::size_t dim) : n_bins_(n_bins), dim_(dim) {}
  void check_dimension(std::span<const double> x) const;

 private:
  int n_bins_;
  std::size_t dim_;
};

enum class KnnMetric { SquaredEuclidean, Manhattan };

struct KnnConfig {
  std::size_t k = 5;
  KnnMetric metric = KnnMetric::SquaredEuclidean;
};

/// Posterior = bin frequencies among the k nearest training points, no
/// smoothing. Distance ties go to the lower training index.
class KnnClassifier final : public TimeClassifier {
 public:
  KnnClassifier(const Dataset& data, KnnConfig cfg);

  TimePosterior predict_posterior(std::span<const double> x) const override;
  /// Training indices of the k nearest neighbours, nearest first.
  std::vector<std::size_t> neighbours(std::span<const double> x) const;

 private:
  double distance(std::span<const double> a, std::span<const double> b) const noexcept;

  Matrix x_;
  std::vector<TimeBin> bins_;
  KnnConfig cfg_;
};

struct ForestConfig {
  std::size_t n_trees = 10;
  std::optional<std::size_t> max_depth;  // unlimited when empty
  std::size_t min_leaf = 1;
  std::uint64_t seed = 0;
};

/// Bagged CART trees, Gini impurity, ⌊√d⌋ candidate features per split.
/// Posterior is the mean of the per-tree leaf bin-frequency vectors.
class RandomForestClassifier final : public TimeClassifier {
 public:
  RandomForestClassifier(const Dataset& data, ForestConfig cfg);

  TimePosterior predict_posterior(std::span<const double> x) const override;
  /// Leaf distribution of every tree for x, in tree order.
  std::vector<std::vector<double>> tree_posteriors(std::span<const double> x) const;
  std::size_t n_trees() const noexcept { return trees_.size(); }

  struct Node {
    std::size_t feature = 0;
    double threshold = 0.0;
    std::int32_t left = -1;  // -1 marks a leaf
    std::int32_t right = -1;
    std::vector<double> distribution;
  };
  using Tree = std::vector<Node>;

 private:
  const std::vector<double>& leaf(const Tree& tree, std::span<const double> x) const;

  std::vector<Tree> trees_;
};

std::unique_ptr<KnnClassifier> fit_knn(const Dataset& data, KnnConfig cfg = {});
std::unique_ptr<RandomForestClassifier> fit_random_forest(const Dataset& data, ForestConfig cfg = {});

/// Elementwise identifiability of the predicted posteriors.
std::vector<double> estimate_identifiability(const TimeClassifier& clf, const Matrix& xs);

/// Mean squared difference. Throws ValidationError on a length mismatch or
/// empty input.
double identifiability_mse(std::span<const double> estimated, std::span<const double> truth);

}  // namespace cfdrift::timeclf
