#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cfdrift/proto.hpp"
#include "cfdrift/types.hpp"

namespace cfdrift::assign {

/// Dissimilarity between feature vectors. Euclidean by default;
/// p-norms and Mahalanobis distances with a positive-definite matrix Ω.
class Dissimilarity {
 public:
  enum class Kind { Euclidean, PNorm, Mahalanobis };

  Dissimilarity() = default;
  static Dissimilarity euclidean() { return {}; }
  /// (Σ|xᵢ − yᵢ|^p)^{1/p}, p ≥ 1.
  static Dissimilarity p_norm(double p);
  /// √((x − y)ᵀ Ω (x − y)). Ω is row-major d×d; rejected unless symmetric
  /// positive definite (checked through a Cholesky factorization).
  static Dissimilarity mahalanobis(std::size_t d, std::vector<double> omega);

  double operator()(std::span<const double> a, std::span<const double> b) const;

  Kind kind() const noexcept { return kind_; }
  double p() const noexcept { return p_; }
  const std::vector<double>& omega() const noexcept { return omega_; }

 private:
  Kind kind_ = Kind::Euclidean;
  double p_ = 2.0;
  std::size_t dim_ = 0;
  std::vector<double> omega_;
};

/// Rows: characteristic samples. Columns: dataset samples in the target bin.
/// Empty entries are infeasible.
struct CostMatrix {
  TimeBin target;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::optional<double>> entries;  // row-major
  std::vector<std::size_t> column_samples;     // dataset index per column

  const std::optional<double>& at(std::size_t r, std::size_t c) const { return entries[r * cols + c]; }
};

/// Entry (x, x') is 0 when both name the same dataset member, infeasible when
/// x already lives in the target bin, and dist(x, x') otherwise.
/// Throws EmptyBinError when the target bin has no samples.
CostMatrix build_cost_matrix(std::span<const proto::CharacteristicSample> characteristic,
                             const Dataset& data, TimeBin target,
                             const Dissimilarity& dist = Dissimilarity::euclidean());

struct AssignedPair {
  std::size_t row = 0;
  std::size_t column = 0;
  std::size_t sample = 0;  // dataset index of the associated sample
  double cost = 0.0;
};

struct AssignmentResult {
  TimeBin target;
  std::vector<AssignedPair> pairs;  // one per row, in row order
  double total_cost = 0.0;
};

/// Column per row of a minimum-cost injective assignment (rows ≤ cols).
/// Infeasible entries are never used; throws InfeasibleAssignmentError
/// naming the rows that could not be placed.
std::vector<std::size_t> solve_assignment(std::size_t rows, std::size_t cols,
                                          std::span<const std::optional<double>> costs);

/// Hungarian method on a cost matrix; O(rows²·cols).
AssignmentResult hungarian(const CostMatrix& costs);

/// One assignment per time bin, bins in ascending order.
std::vector<AssignmentResult> associate_all(std::span<const proto::CharacteristicSample> characteristic,
                                            const Dataset& data,
                                            const Dissimilarity& dist = Dissimilarity::euclidean());

/// associated − characteristic, elementwise.
std::vector<double> feature_difference(const TimedSample& characteristic, const TimedSample& associated);

}  // namespace cfdrift::assign
