#include "cfdrift/timeclf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cfdrift/entropy.hpp"
#include "cfdrift/errors.hpp"
#include "cfdrift/random.hpp"

namespace cfdrift::timeclf {

void TimeClassifier::check_dimension(std::span<const double> x) const {
  if (x.size() != dim_) {
    throw ValidationError("query has dimension " + std::to_string(x.size()) +
                          ", classifier was trained on " + std::to_string(dim_));
  }
}

KnnClassifier::KnnClassifier(const Dataset& data, KnnConfig cfg)
    : TimeClassifier(data.n_bins(), data.dimension()),
      x_(data.features()),
      bins_(data.bins()),
      cfg_(cfg) {
  if (data.size() == 0) throw ValidationError("k-NN needs a nonempty training set");
  if (cfg_.k < 1 || cfg_.k > data.size()) {
    throw ValidationError("k-NN k=" + std::to_string(cfg_.k) + " outside 1.." +
                          std::to_string(data.size()));
  }
}

double KnnClassifier::distance(std::span<const double> a, std::span<const double> b) const noexcept {
  if (cfg_.metric == KnnMetric::Manhattan) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
  }
  return squared_euclidean(a, b);
}

std::vector<std::size_t> KnnClassifier::neighbours(std::span<const double> x) const {
  check_dimension(x);
  std::vector<std::pair<double, std::size_t>> d(x_.rows());
  for (std::size_t i = 0; i < x_.rows(); ++i) d[i] = {distance(x, x_.row(i)), i};
  const auto k = static_cast<std::ptrdiff_t>(cfg_.k);
  std::partial_sort(d.begin(), d.begin() + k, d.end());
  std::vector<std::size_t> out(cfg_.k);
  for (std::size_t i = 0; i < cfg_.k; ++i) out[i] = d[i].second;
  return out;
}

TimePosterior KnnClassifier::predict_posterior(std::span<const double> x) const {
  std::vector<double> counts(static_cast<std::size_t>(n_bins()), 0.0);
  for (auto idx : neighbours(x)) counts[bins_[idx].offset()] += 1.0;
  for (double& c : counts) c /= static_cast<double>(cfg_.k);
  return TimePosterior::from_probabilities(std::move(counts));
}

namespace {

struct TreeBuilder {
  const Dataset& data;
  const ForestConfig& cfg;
  Rng& rng;
  std::size_t n_bins;
  std::size_t max_features;
  RandomForestClassifier::Tree tree;

  std::vector<double> distribution(std::span<const std::size_t> idx) const {
    std::vector<double> d(n_bins, 0.0);
    for (auto i : idx) d[data.bin(i).offset()] += 1.0;
    for (double& v : d) v /= static_cast<double>(idx.size());
    return d;
  }

  static double gini(std::span<const double> counts, double total) {
    if (total <= 0.0) return 0.0;
    double s = 0.0;
    for (double c : counts) s += (c / total) * (c / total);
    return 1.0 - s;
  }

  struct Split {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double impurity = 0.0;
  };

  Split best_split_on(std::vector<std::size_t>& idx, std::size_t feature) const {
    Split best;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      const double va = data.x(a)[feature], vb = data.x(b)[feature];
      return va < vb || (va == vb && a < b);
    });
    std::vector<double> left(n_bins, 0.0), right(n_bins, 0.0);
    for (auto i : idx) right[data.bin(i).offset()] += 1.0;
    const double n = static_cast<double>(idx.size());
    for (std::size_t pos = 0; pos + 1 < idx.size(); ++pos) {
      const auto b = data.bin(idx[pos]).offset();
      left[b] += 1.0;
      right[b] -= 1.0;
      const double v = data.x(idx[pos])[feature];
      const double next = data.x(idx[pos + 1])[feature];
      if (v == next) continue;
      const double nl = static_cast<double>(pos + 1), nr = n - nl;
      if (nl < static_cast<double>(cfg.min_leaf) || nr < static_cast<double>(cfg.min_leaf)) continue;
      const double imp = (nl * gini(left, nl) + nr * gini(right, nr)) / n;
      if (!best.found || imp < best.impurity) {
        double thr = 0.5 * (v + next);
        if (!(thr >= v && thr < next)) thr = v;  // midpoint rounding guard
        best = {true, feature, thr, imp};
      }
    }
    return best;
  }

  std::int32_t build(std::vector<std::size_t> idx, std::size_t depth) {
    const auto node_id = static_cast<std::int32_t>(tree.size());
    tree.push_back({});
    auto dist = distribution(idx);
    const bool pure = std::count_if(dist.begin(), dist.end(), [](double v) { return v > 0.0; }) <= 1;
    const bool depth_cap = cfg.max_depth && depth >= *cfg.max_depth;
    if (pure || depth_cap || idx.size() < 2 * cfg.min_leaf) {
      tree[static_cast<std::size_t>(node_id)].distribution = std::move(dist);
      return node_id;
    }
    const std::size_t d = data.dimension();
    std::vector<std::size_t> features(d);
    std::iota(features.begin(), features.end(), 0);
    std::shuffle(features.begin(), features.end(), rng);
    Split best;
    // Sampled features first; fall through to the rest only when none of
    // them admits a split, as in common CART implementations.
    for (std::size_t f = 0; f < d; ++f) {
      if (f >= max_features && best.found) break;
      auto s = best_split_on(idx, features[f]);
      if (s.found && (!best.found || s.impurity < best.impurity)) best = s;
    }
    if (!best.found) {
      tree[static_cast<std::size_t>(node_id)].distribution = std::move(dist);
      return node_id;
    }
    std::vector<std::size_t> l, r;
    for (auto i : idx) (data.x(i)[best.feature] <= best.threshold ? l : r).push_back(i);
    idx.clear();
    idx.shrink_to_fit();
    const auto left = build(std::move(l), depth + 1);
    const auto right = build(std::move(r), depth + 1);
    auto& node = tree[static_cast<std::size_t>(node_id)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = left;
    node.right = right;
    return node_id;
  }
};

}  // namespace

RandomForestClassifier::RandomForestClassifier(const Dataset& data, ForestConfig cfg)
    : TimeClassifier(data.n_bins(), data.dimension()) {
  if (data.size() == 0) throw ValidationError("random forest needs a nonempty training set");
  if (cfg.n_trees < 1) throw ValidationError("random forest needs at least one tree");
  if (cfg.min_leaf < 1) throw ValidationError("random forest min_leaf must be at least 1");
  Rng rng(cfg.seed);
  const std::size_t n = data.size();
  const auto max_features = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(data.dimension())))));
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (std::size_t t = 0; t < cfg.n_trees; ++t) {
    std::vector<std::size_t> boot(n);
    for (auto& b : boot) b = pick(rng);
    TreeBuilder builder{data, cfg, rng, static_cast<std::size_t>(data.n_bins()), max_features, {}};
    builder.build(std::move(boot), 0);
    trees_.push_back(std::move(builder.tree));
  }
}

const std::vector<double>& RandomForestClassifier::leaf(const Tree& tree,
                                                        std::span<const double> x) const {
  std::size_t node = 0;
  while (tree[node].left >= 0) {
    const auto& n = tree[node];
    node = static_cast<std::size_t>(x[n.feature] <= n.threshold ? n.left : n.right);
  }
  return tree[node].distribution;
}

std::vector<std::vector<double>> RandomForestClassifier::tree_posteriors(
    std::span<const double> x) const {
  check_dimension(x);
  std::vector<std::vector<double>> out;
  out.reserve(trees_.size());
  for (const auto& t : trees_) out.push_back(leaf(t, x));
  return out;
}

TimePosterior RandomForestClassifier::predict_posterior(std::span<const double> x) const {
  check_dimension(x);
  std::vector<double> acc(static_cast<std::size_t>(n_bins()), 0.0);
  for (const auto& t : trees_) {
    const auto& d = leaf(t, x);
    for (std::size_t b = 0; b < acc.size(); ++b) acc[b] += d[b];
  }
  for (double& v : acc) v /= static_cast<double>(trees_.size());
  return TimePosterior::from_probabilities(std::move(acc));
}

std::unique_ptr<KnnClassifier> fit_knn(const Dataset& data, KnnConfig cfg) {
  return std::make_unique<KnnClassifier>(data, cfg);
}

std::unique_ptr<RandomForestClassifier> fit_random_forest(const Dataset& data, ForestConfig cfg) {
  return std::make_unique<RandomForestClassifier>(data, cfg);
}

std::vector<double> estimate_identifiability(const TimeClassifier& clf, const Matrix& xs) {
  std::vector<double> out;
  out.reserve(xs.rows());
  for (std::size_t i = 0; i < xs.rows(); ++i) {
    out.push_back(identifiability(clf.predict_posterior(xs.row(i))));
  }
  return out;
}

double identifiability_mse(std::span<const double> estimated, std::span<const double> truth) {
  if (estimated.size() != truth.size()) {
    throw ValidationError("MSE inputs differ in length");
  }
  if (estimated.empty()) throw ValidationError("MSE of empty sequences");
  double s = 0.0;
  for (std::size_t i = 0; i < estimated.size(); ++i) {
    const double d = estimated[i] - truth[i];
    s += d * d;
  }
  return s / static_cast<double>(estimated.size());
}

}  // namespace cfdrift::timeclf
