#include "cfdrift/types.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "cfdrift/errors.hpp"
#include "cfdrift/random.hpp"

namespace cfdrift {

Matrix::Matrix(std::size_t cols, std::vector<double> data)
    : rows_(cols == 0 ? 0 : data.size() / cols), cols_(cols), data_(std::move(data)) {
  if (cols == 0 || data_.size() % cols != 0) {
    throw ValidationError("matrix data size is not a multiple of the column count");
  }
}

Matrix Matrix::from_rows(std::span<const FeatureVector> rows) {
  if (rows.empty()) return {};
  Matrix m(0, rows.front().size());
  m.data_.reserve(rows.size() * m.cols_);
  for (const auto& r : rows) m.append_row(r);
  return m;
}

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) {
    throw ValidationError("row has " + std::to_string(values.size()) + " values, expected " +
                          std::to_string(cols_));
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  Matrix out(0, cols_);
  out.data_.reserve(indices.size() * cols_);
  for (auto i : indices) out.append_row(row(i));
  return out;
}

Dataset::Dataset(Matrix features, std::vector<TimeBin> bins, int n_bins)
    : features_(std::move(features)), bins_(std::move(bins)), n_bins_(n_bins) {
  if (n_bins_ < 1) throw ValidationError("dataset needs at least one time bin");
  if (features_.rows() != bins_.size()) {
    throw ValidationError("feature rows and bin labels differ in length");
  }
  if (features_.rows() > 0 && features_.cols() == 0) {
    throw ValidationError("feature dimension must be at least 1");
  }
  for (double v : features_.data()) {
    if (!std::isfinite(v)) throw ValidationError("dataset contains a non-finite feature value");
  }
  std::vector<std::size_t> counts(static_cast<std::size_t>(n_bins_), 0);
  for (auto t : bins_) {
    if (t.index < 1 || t.index > n_bins_) {
      throw ValidationError("time bin " + std::to_string(t.index) + " outside 1.." +
                            std::to_string(n_bins_));
    }
    ++counts[t.offset()];
  }
  for (std::size_t b = 0; b < counts.size(); ++b) {
    if (counts[b] == 0) {
      const int bin = static_cast<int>(b) + 1;
      throw EmptyBinError(bin, "time bin " + std::to_string(bin) + " has no samples");
    }
  }
}

Dataset Dataset::from_samples(std::span<const TimedSample> samples, int n_bins) {
  Matrix m;
  std::vector<TimeBin> bins;
  bins.reserve(samples.size());
  for (const auto& s : samples) {
    m.append_row(s.x);
    bins.push_back(s.t);
  }
  return Dataset(std::move(m), std::move(bins), n_bins);
}

TimedSample Dataset::sample(std::size_t i) const {
  auto r = x(i);
  return {FeatureVector(r.begin(), r.end()), bins_[i]};
}

std::vector<std::size_t> Dataset::indices_in_bin(TimeBin t) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < bins_.size(); ++i) {
    if (bins_[i] == t) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> Dataset::bin_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(n_bins_), 0);
  for (auto t : bins_) ++counts[t.offset()];
  return counts;
}

Dataset Dataset::with_features(Matrix features) const {
  if (features.rows() != features_.rows()) {
    throw ValidationError("replacement features have a different row count");
  }
  return Dataset(std::move(features), bins_, n_bins_);
}

TimePosterior TimePosterior::from_probabilities(std::vector<double> probs) {
  if (probs.empty()) throw ValidationError("posterior over zero bins");
  double sum = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0) {
      throw ValidationError("posterior entry is negative or non-finite");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kTolerance) {
    throw ValidationError("posterior sums to " + std::to_string(sum) + ", not 1");
  }
  for (double& p : probs) p /= sum;
  return TimePosterior(std::move(probs));
}

TimePosterior TimePosterior::uniform(std::size_t n_bins) {
  if (n_bins == 0) throw ValidationError("posterior over zero bins");
  return TimePosterior(std::vector<double>(n_bins, 1.0 / static_cast<double>(n_bins)));
}

TimePosterior TimePosterior::point_mass(std::size_t n_bins, TimeBin bin) {
  if (bin.index < 1 || static_cast<std::size_t>(bin.index) > n_bins) {
    throw ValidationError("point mass bin out of range");
  }
  std::vector<double> p(n_bins, 0.0);
  p[bin.offset()] = 1.0;
  return TimePosterior(std::move(p));
}

double squared_euclidean(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double euclidean(std::span<const double> a, std::span<const double> b) noexcept {
  return std::sqrt(squared_euclidean(a, b));
}

namespace {
std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> ids) noexcept {
  std::uint64_t h = splitmix64(base);
  for (auto id : ids) h = splitmix64(h ^ splitmix64(id + 0x632be59bd9b4e019ULL));
  return h;
}

}  // namespace cfdrift
