#include "cfdrift/assign.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cfdrift/errors.hpp"

namespace cfdrift::assign {

Dissimilarity Dissimilarity::p_norm(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw ValidationError("p-norm needs finite p >= 1");
  Dissimilarity d;
  d.kind_ = Kind::PNorm;
  d.p_ = p;
  return d;
}

Dissimilarity Dissimilarity::mahalanobis(std::size_t d, std::vector<double> omega) {
  if (d == 0 || omega.size() != d * d) throw ValidationError("Mahalanobis matrix must be d x d");
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
      omega.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  if (!m.allFinite() || !m.isApprox(m.transpose(), 1e-12)) {
    throw ValidationError("Mahalanobis matrix must be finite and symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw ValidationError("Mahalanobis matrix is not positive definite");
  }
  Dissimilarity out;
  out.kind_ = Kind::Mahalanobis;
  out.dim_ = d;
  out.omega_ = std::move(omega);
  return out;
}

double Dissimilarity::operator()(std::span<const double> a, std::span<const double> b) const {
  if (a.size() != b.size()) throw ValidationError("dissimilarity of vectors with different lengths");
  switch (kind_) {
    case Kind::Euclidean:
      return cfdrift::euclidean(a, b);
    case Kind::PNorm: {
      double s = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) s += std::pow(std::abs(a[i] - b[i]), p_);
      return std::pow(s, 1.0 / p_);
    }
    case Kind::Mahalanobis: {
      if (a.size() != dim_) throw ValidationError("Mahalanobis matrix does not match the dimension");
      double q = 0.0;
      for (std::size_t i = 0; i < dim_; ++i) {
        const double di = a[i] - b[i];
        for (std::size_t j = 0; j < dim_; ++j) q += di * omega_[i * dim_ + j] * (a[j] - b[j]);
      }
      return std::sqrt(std::max(q, 0.0));
    }
  }
  return 0.0;
}

CostMatrix build_cost_matrix(std::span<const proto::CharacteristicSample> characteristic,
                             const Dataset& data, TimeBin target, const Dissimilarity& dist) {
  if (target.index < 1 || target.index > data.n_bins()) {
    throw ValidationError("target bin " + std::to_string(target.index) + " out of range");
  }
  CostMatrix m;
  m.target = target;
  m.column_samples = data.indices_in_bin(target);
  if (m.column_samples.empty()) {
    throw EmptyBinError(target.index, "no samples at target bin " + std::to_string(target.index));
  }
  m.rows = characteristic.size();
  m.cols = m.column_samples.size();
  m.entries.resize(m.rows * m.cols);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const auto& c = characteristic[r];
    if (c.index >= data.size()) throw ValidationError("characteristic sample outside the dataset");
    for (std::size_t col = 0; col < m.cols; ++col) {
      const std::size_t j = m.column_samples[col];
      auto& e = m.entries[r * m.cols + col];
      if (j == c.index) {
        e = 0.0;
      } else if (c.sample.t == target) {
        e.reset();
      } else {
        e = dist(c.sample.x, data.x(j));
      }
    }
  }
  return m;
}

std::vector<std::size_t> solve_assignment(std::size_t rows, std::size_t cols,
                                          std::span<const std::optional<double>> costs) {
  if (costs.size() != rows * cols) throw ValidationError("cost matrix has the wrong size");
  if (rows == 0) return {};
  if (rows > cols) {
    throw ValidationError("assignment needs at most as many rows as columns (" +
                          std::to_string(rows) + " > " + std::to_string(cols) + ")");
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < rows; ++r) {
    bool any = false;
    for (std::size_t c = 0; c < cols; ++c) {
      const auto& e = costs[r * cols + c];
      if (e && !std::isfinite(*e)) throw ValidationError("feasible costs must be finite");
      any = any || e.has_value();
    }
    if (!any) {
      throw InfeasibleAssignmentError({r}, "row " + std::to_string(r) + " has no feasible column");
    }
  }
  auto cost = [&](std::size_t r, std::size_t c) {
    const auto& e = costs[(r - 1) * cols + (c - 1)];
    return e ? *e : inf;
  };
  // Shortest augmenting paths with potentials; 1-based, column 0 is the
  // virtual root. Non-square input needs no padding since rows ≤ cols.
  std::vector<double> u(rows + 1, 0.0), v(cols + 1, 0.0), minv(cols + 1);
  std::vector<std::size_t> match(cols + 1, 0), way(cols + 1, 0);
  std::vector<char> used(cols + 1);
  for (std::size_t i = 1; i <= rows; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= cols; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      if (!std::isfinite(delta)) {
        std::vector<std::size_t> blocked;
        for (std::size_t j = 0; j <= cols; ++j) {
          if (used[j] && match[j] != 0) blocked.push_back(match[j] - 1);
        }
        std::sort(blocked.begin(), blocked.end());
        std::string names;
        for (auto b : blocked) names += (names.empty() ? "" : ", ") + std::to_string(b);
        throw InfeasibleAssignmentError(blocked, "no feasible assignment for rows {" + names + "}");
      }
      for (std::size_t j = 0; j <= cols; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> out(rows);
  for (std::size_t j = 1; j <= cols; ++j) {
    if (match[j] != 0) out[match[j] - 1] = j - 1;
  }
  return out;
}

AssignmentResult hungarian(const CostMatrix& costs) {
  AssignmentResult result;
  result.target = costs.target;
  const auto cols = solve_assignment(costs.rows, costs.cols, costs.entries);
  for (std::size_t r = 0; r < costs.rows; ++r) {
    const double c = *costs.at(r, cols[r]);
    result.pairs.push_back({r, cols[r], costs.column_samples[cols[r]], c});
    result.total_cost += c;
  }
  return result;
}

std::vector<AssignmentResult> associate_all(std::span<const proto::CharacteristicSample> characteristic,
                                            const Dataset& data, const Dissimilarity& dist) {
  std::vector<AssignmentResult> out;
  for (int b = 1; b <= data.n_bins(); ++b) {
    const TimeBin t{b};
    if (characteristic.empty()) {
      out.push_back({t, {}, 0.0});
      continue;
    }
    out.push_back(hungarian(build_cost_matrix(characteristic, data, t, dist)));
  }
  return out;
}

std::vector<double> feature_difference(const TimedSample& characteristic, const TimedSample& associated) {
  if (characteristic.x.size() != associated.x.size()) {
    throw ValidationError("feature difference of samples with different dimensions");
  }
  std::vector<double> d(characteristic.x.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = associated.x[i] - characteristic.x[i];
  return d;
}

}  // namespace cfdrift::assign
