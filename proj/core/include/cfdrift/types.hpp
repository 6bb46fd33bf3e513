#pragma once

#include <compare>
#include <cstddef>
#include <span>
#include <vector>

namespace cfdrift {

using FeatureVector = std::vector<double>;

/// 1-based index of a time bin. Bins are the segments between change points.
struct TimeBin {
  int index = 1;

  constexpr std::size_t offset() const noexcept { return static_cast<std::size_t>(index - 1); }
  friend constexpr auto operator<=>(TimeBin, TimeBin) = default;
};

struct TimedSample {
  FeatureVector x;
  TimeBin t;
};

/// Dense row-major matrix of feature rows.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t cols, std::vector<double> data);

  static Matrix from_rows(std::span<const FeatureVector> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }

  void append_row(std::span<const double> values);
  Matrix select_rows(std::span<const std::size_t> indices) const;
  const std::vector<double>& data() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Timed samples with a uniform feature dimension. Every bin in
/// {1..n_bins} holds at least one sample and every feature is finite.
class Dataset {
 public:
  Dataset() = default;
  /// Throws ValidationError / EmptyBinError when an invariant is violated.
  Dataset(Matrix features, std::vector<TimeBin> bins, int n_bins);

  static Dataset from_samples(std::span<const TimedSample> samples, int n_bins);

  std::size_t size() const noexcept { return features_.rows(); }
  std::size_t dimension() const noexcept { return features_.cols(); }
  int n_bins() const noexcept { return n_bins_; }

  std::span<const double> x(std::size_t i) const noexcept { return features_.row(i); }
  TimeBin bin(std::size_t i) const noexcept { return bins_[i]; }
  TimedSample sample(std::size_t i) const;

  const Matrix& features() const noexcept { return features_; }
  const std::vector<TimeBin>& bins() const noexcept { return bins_; }
  std::vector<std::size_t> indices_in_bin(TimeBin t) const;
  std::vector<std::size_t> bin_counts() const;

  /// Same bins, different feature matrix (e.g. standardized). Row count and
  /// width must match.
  Dataset with_features(Matrix features) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  Matrix features_;
  std::vector<TimeBin> bins_;
  int n_bins_ = 0;
};

/// Probability vector over time bins.
class TimePosterior {
 public:
  /// Simplex tolerance for validation.
  static constexpr double kTolerance = 1e-9;

  /// Validates and renormalizes. Rejects negative or non-finite entries and
  /// sums further than kTolerance from one.
  static TimePosterior from_probabilities(std::vector<double> probs);
  static TimePosterior uniform(std::size_t n_bins);
  static TimePosterior point_mass(std::size_t n_bins, TimeBin bin);

  std::size_t n_bins() const noexcept { return probs_.size(); }
  double operator[](std::size_t offset) const noexcept { return probs_[offset]; }
  std::span<const double> probabilities() const noexcept { return probs_; }

 private:
  explicit TimePosterior(std::vector<double> probs) : probs_(std::move(probs)) {}
  std::vector<double> probs_;
};

double squared_euclidean(std::span<const double> a, std::span<const double> b) noexcept;
double euclidean(std::span<const double> a, std::span<const double> b) noexcept;

}  // namespace cfdrift
