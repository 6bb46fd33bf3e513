#include "cfdrift/proto.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "cfdrift/errors.hpp"
#include "cfdrift/random.hpp"

namespace cfdrift::proto {

namespace {

void check_weights(std::span<const double> weights) {
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw ValidationError("weights must be finite and nonnegative");
  }
}

/// First index whose running sum exceeds u. Zero-weight entries are never
/// returned while some positive weight exists.
std::size_t pick_cumulative(std::span<const double> cumulative, double u) {
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  if (it == cumulative.end()) {
    // u landed on the total through rounding; take the last positive entry.
    it = std::prev(cumulative.end());
    while (it != cumulative.begin() && *std::prev(it) == *it) --it;
  }
  return static_cast<std::size_t>(it - cumulative.begin());
}

std::size_t sample_proportional(std::span<const double> weights, Rng& rng) {
  std::vector<double> cum(weights.size());
  std::partial_sum(weights.begin(), weights.end(), cum.begin());
  std::uniform_real_distribution<double> unit(0.0, cum.back());
  return pick_cumulative(cum, unit(rng));
}

}  // namespace

std::vector<std::size_t> weighted_resample(std::span<const double> weights, std::size_t m,
                                           std::uint64_t seed) {
  if (weights.empty()) throw ValidationError("cannot resample from an empty set");
  if (m < 1) throw ValidationError("resample size must be at least 1");
  check_weights(weights);
  Rng rng(seed);
  std::vector<std::size_t> out(m);
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (total == 0.0) {
    std::uniform_int_distribution<std::size_t> pick(0, weights.size() - 1);
    for (auto& o : out) o = pick(rng);
    return out;
  }
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  for (auto& o : out) o = pick(rng);
  return out;
}

std::vector<std::size_t> weighted_resample(const Dataset& data, std::span<const double> weights,
                                           std::size_t m, std::uint64_t seed) {
  if (weights.size() != data.size()) {
    throw ValidationError("need exactly one weight per dataset sample");
  }
  return weighted_resample(weights, m, seed);
}

KMeansResult kmeans(const Matrix& points, std::size_t k, std::span<const double> weights,
                    KMeansOptions options) {
  const std::size_t n = points.rows();
  if (k < 1 || k > n) {
    throw ValidationError("k-means needs 1 <= k <= number of points");
  }
  if (!weights.empty() && weights.size() != n) {
    throw ValidationError("k-means weights must match the number of points");
  }
  check_weights(weights);
  std::vector<double> w(n, 1.0);
  if (!weights.empty() && std::accumulate(weights.begin(), weights.end(), 0.0) > 0.0) {
    w.assign(weights.begin(), weights.end());
  }

  Rng rng(options.seed);
  const std::size_t dim = points.cols();
  Matrix centers(0, dim);

  // Greedy k-means++: several D²-weighted candidates per step, keep the one
  // that lowers the potential most.
  std::vector<double> closest(n);
  std::vector<char> chosen(n, 0);
  const std::size_t first = sample_proportional(w, rng);
  centers.append_row(points.row(first));
  chosen[first] = 1;
  double potential = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    closest[i] = squared_euclidean(points.row(i), centers.row(0));
    potential += w[i] * closest[i];
  }
  const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));
  std::vector<double> cum(n), scratch(n), best_closest(n);
  while (centers.rows() < k) {
    std::size_t pick = 0;
    if (potential <= 0.0) {
      std::vector<double> fresh(n);
      for (std::size_t i = 0; i < n; ++i) fresh[i] = chosen[i] ? 0.0 : w[i];
      if (std::accumulate(fresh.begin(), fresh.end(), 0.0) <= 0.0) {
        for (std::size_t i = 0; i < n; ++i) fresh[i] = chosen[i] ? 0.0 : 1.0;
      }
      pick = sample_proportional(fresh, rng);
      for (std::size_t i = 0; i < n; ++i) {
        best_closest[i] = std::min(closest[i], squared_euclidean(points.row(i), points.row(pick)));
      }
    } else {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += w[i] * closest[i];
        cum[i] = acc;
      }
      std::uniform_real_distribution<double> unit(0.0, acc);
      double best_pot = std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t cand = pick_cumulative(cum, unit(rng));
        double pot = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          scratch[i] = std::min(closest[i], squared_euclidean(points.row(i), points.row(cand)));
          pot += w[i] * scratch[i];
        }
        if (pot < best_pot) {
          best_pot = pot;
          pick = cand;
          best_closest = scratch;
        }
      }
    }
    centers.append_row(points.row(pick));
    chosen[pick] = 1;
    closest = best_closest;
    potential = 0.0;
    for (std::size_t i = 0; i < n; ++i) potential += w[i] * closest[i];
  }

  KMeansResult result;
  result.labels.assign(n, 0);
  std::vector<double> dist(n);
  for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_euclidean(points.row(i), centers.row(c));
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (iter == 0 || best != result.labels[i]) changed = true;
      result.labels[i] = best;
      dist[i] = bd;
      inertia += w[i] * bd;
    }
    result.inertia_history.push_back(inertia);
    result.iterations = iter + 1;
    if (!changed) {
      result.converged = true;
      break;
    }

    Matrix sums(k, dim, 0.0);
    std::vector<double> mass(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = result.labels[i];
      mass[c] += w[i];
      auto s = sums.row(c);
      auto x = points.row(i);
      for (std::size_t j = 0; j < dim; ++j) s[j] += w[i] * x[j];
    }
    std::vector<char> used(n, 0);
    for (std::size_t c = 0; c < k; ++c) {
      auto centre = centers.row(c);
      if (mass[c] > 0.0) {
        auto s = sums.row(c);
        for (std::size_t j = 0; j < dim; ++j) centre[j] = s[j] / mass[c];
        continue;
      }
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (used[i] || w[i] <= 0.0) continue;
        if (far == n || dist[i] > dist[far]) far = i;
      }
      if (far == n) continue;
      used[far] = 1;
      auto x = points.row(far);
      std::copy(x.begin(), x.end(), centre.begin());
    }
  }
  result.prototypes = {std::move(centers), "kmeans"};
  return result;
}

double median_pairwise_distance(const Matrix& points) {
  const std::size_t n = points.rows();
  if (n < 2) return 0.0;
  std::vector<double> d;
  d.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) d.push_back(euclidean(points.row(i), points.row(j)));
  }
  const std::size_t mid = d.size() / 2;
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid), d.end());
  double median = d[mid];
  if (d.size() % 2 == 0) {
    const double lower = *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + lower);
  }
  return median;
}

namespace {

/// Distinct rows with multiplicities, in first-occurrence order.
void unique_rows(const Matrix& points, Matrix& uniq, std::vector<double>& count) {
  std::vector<std::size_t> order(points.rows());
  std::iota(order.begin(), order.end(), 0);
  auto less = [&](std::size_t a, std::size_t b) {
    auto ra = points.row(a), rb = points.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  };
  std::stable_sort(order.begin(), order.end(), less);
  std::vector<std::size_t> rep(points.rows());
  for (std::size_t p = 0; p < order.size(); ++p) {
    const bool same = p > 0 && !less(order[p - 1], order[p]) && !less(order[p], order[p - 1]);
    rep[order[p]] = same ? rep[order[p - 1]] : order[p];
  }
  std::map<std::size_t, std::size_t> slot;
  uniq = Matrix(0, points.cols());
  count.clear();
  for (std::size_t i = 0; i < points.rows(); ++i) {
    auto [it, inserted] = slot.emplace(rep[i], count.size());
    if (inserted) {
      uniq.append_row(points.row(i));
      count.push_back(0.0);
    }
    count[it->second] += 1.0;
  }
}

}  // namespace

MeanShiftResult mean_shift(const Matrix& points, MeanShiftOptions options) {
  if (points.rows() < 1) throw ValidationError("mean shift needs at least one point");
  if (options.bandwidth && !(*options.bandwidth > 0.0)) {
    throw ValidationError("mean shift bandwidth must be positive");
  }
  Matrix uniq;
  std::vector<double> count;
  unique_rows(points, uniq, count);
  MeanShiftResult result;
  if (uniq.rows() == 1) {
    result.prototypes = {uniq, "mean-shift"};
    result.support = {points.rows()};
    return result;
  }
  double h = 0.0;
  if (options.bandwidth) {
    h = *options.bandwidth;
  } else {
    h = median_pairwise_distance(points);
    if (h <= 0.0) h = median_pairwise_distance(uniq);
  }
  result.bandwidth = h;
  const double inv2h2 = 1.0 / (2.0 * h * h);
  const std::size_t dim = points.cols();
  const std::size_t u = uniq.rows();

  Matrix converged(u, dim);
  std::vector<double> next(dim);
  for (std::size_t s = 0; s < u; ++s) {
    std::vector<double> x(uniq.row(s).begin(), uniq.row(s).end());
    for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
      std::fill(next.begin(), next.end(), 0.0);
      double total = 0.0;
      for (std::size_t j = 0; j < u; ++j) {
        const double k = count[j] * std::exp(-squared_euclidean(x, uniq.row(j)) * inv2h2);
        if (k == 0.0) continue;
        total += k;
        auto p = uniq.row(j);
        for (std::size_t c = 0; c < dim; ++c) next[c] += k * p[c];
      }
      if (total == 0.0) break;
      for (double& v : next) v /= total;
      const double step = euclidean(next, x);
      x = next;
      if (step < options.tolerance * h) break;
    }
    std::copy(x.begin(), x.end(), converged.row(s).begin());
  }

  // Group trajectories that reached the same mode, then merge modes within
  // h/2, larger support first.
  struct Mode {
    std::size_t first;
    double support;
  };
  std::vector<Mode> groups;
  const double same_mode = 10.0 * options.tolerance * h;
  for (std::size_t s = 0; s < u; ++s) {
    bool merged = false;
    for (auto& g : groups) {
      if (euclidean(converged.row(g.first), converged.row(s)) <= same_mode) {
        g.support += count[s];
        merged = true;
        break;
      }
    }
    if (!merged) groups.push_back({s, count[s]});
  }
  std::stable_sort(groups.begin(), groups.end(),
                   [](const Mode& a, const Mode& b) { return a.support > b.support; });
  std::vector<Mode> kept;
  for (const auto& g : groups) {
    std::size_t nearest = kept.size();
    double nd = std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < kept.size(); ++q) {
      const double d = euclidean(converged.row(kept[q].first), converged.row(g.first));
      if (d < nd) {
        nd = d;
        nearest = q;
      }
    }
    if (nearest < kept.size() && nd < 0.5 * h) {
      kept[nearest].support += g.support;
    } else {
      kept.push_back(g);
    }
  }
  Matrix modes(0, dim);
  for (const auto& m : kept) {
    modes.append_row(converged.row(m.first));
    result.support.push_back(static_cast<std::size_t>(m.support));
  }
  result.prototypes = {std::move(modes), "mean-shift"};
  return result;
}

AffinityResult affinity_propagation_similarity(const Matrix& similarity, AffinityOptions options) {
  const std::size_t n = similarity.rows();
  if (n < 2 || similarity.cols() != n) {
    throw ValidationError("affinity propagation needs a square similarity matrix over >= 2 points");
  }
  if (!(options.damping >= 0.5 && options.damping < 1.0)) {
    throw ValidationError("affinity propagation damping must lie in [0.5, 1)");
  }
  if (options.convergence_iter < 1) throw ValidationError("convergence_iter must be at least 1");
  Matrix s = similarity;
  if (options.jitter_seed) {
    Rng rng(*options.jitter_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    constexpr double eps = std::numeric_limits<double>::epsilon();
    constexpr double tiny = std::numeric_limits<double>::min();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) s(i, k) += (eps * s(i, k) + tiny * 100.0) * normal(rng);
    }
  }
  const double damp = options.damping;
  Matrix r(n, n, 0.0), a(n, n, 0.0);
  std::vector<double> colsum(n);
  std::vector<std::vector<char>> history(options.convergence_iter, std::vector<char>(n, 0));
  AffinityResult result;
  for (std::size_t it = 0; it < options.max_iter; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double first = -std::numeric_limits<double>::infinity();
      double second = first;
      std::size_t arg = 0;
      for (std::size_t k = 0; k < n; ++k) {
        const double v = a(i, k) + s(i, k);
        if (v > first) {
          second = first;
          first = v;
          arg = k;
        } else if (v > second) {
          second = v;
        }
      }
      for (std::size_t k = 0; k < n; ++k) {
        const double fresh = s(i, k) - (k == arg ? second : first);
        r(i, k) = damp * r(i, k) + (1.0 - damp) * fresh;
      }
    }
    std::fill(colsum.begin(), colsum.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) colsum[k] += i == k ? r(i, k) : std::max(r(i, k), 0.0);
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        const double fresh = i == k ? colsum[k] - r(k, k)
                                    : std::min(colsum[k] - std::max(r(i, k), 0.0), 0.0);
        a(i, k) = damp * a(i, k) + (1.0 - damp) * fresh;
      }
    }

    auto& e = history[it % options.convergence_iter];
    std::size_t exemplars = 0;
    for (std::size_t k = 0; k < n; ++k) {
      e[k] = (a(k, k) + r(k, k)) > 0.0;
      exemplars += static_cast<std::size_t>(e[k]);
    }
    result.iterations = it + 1;
    if (it + 1 >= options.convergence_iter) {
      bool unconverged = false;
      for (std::size_t k = 0; k < n && !unconverged; ++k) {
        std::size_t on = 0;
        for (const auto& h : history) on += static_cast<std::size_t>(h[k]);
        unconverged = on != 0 && on != options.convergence_iter;
      }
      if (!unconverged && exemplars > 0) {
        result.converged = true;
        break;
      }
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (a(k, k) + r(k, k) > 0.0) result.exemplars.push_back(k);
  }
  if (result.exemplars.empty()) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < n; ++k) {
      if (a(k, k) + r(k, k) > a(best, best) + r(best, best)) best = k;
    }
    result.exemplars.push_back(best);
    result.converged = false;
  }
  return result;
}

AffinityResult affinity_propagation(const Matrix& points, AffinityOptions options) {
  const std::size_t n = points.rows();
  if (n < 2) throw ValidationError("affinity propagation needs at least two points");
  Matrix s(n, n, 0.0);
  std::vector<double> off;
  off.reserve(n * (n - 1));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      if (i == k) continue;
      s(i, k) = -squared_euclidean(points.row(i), points.row(k));
      off.push_back(s(i, k));
    }
  }
  double pref = 0.0;
  if (options.preference) {
    pref = *options.preference;
  } else {
    const std::size_t mid = off.size() / 2;
    std::nth_element(off.begin(), off.begin() + static_cast<std::ptrdiff_t>(mid), off.end());
    pref = off[mid];
    if (off.size() % 2 == 0) {
      pref = 0.5 * (pref + *std::max_element(off.begin(), off.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
  }
  for (std::size_t i = 0; i < n; ++i) s(i, i) = pref;
  auto result = affinity_propagation_similarity(s, options);
  result.prototypes = {points.select_rows(result.exemplars), "affinity-propagation"};
  return result;
}

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::KMeansResampled: return "kmeans-resampled";
    case Method::KMeansWeighted: return "kmeans-weighted";
    case Method::KMeansBaseline: return "kmeans-baseline";
    case Method::MeanShift: return "mean-shift";
    case Method::AffinityPropagation: return "affinity-propagation";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (auto m : {Method::KMeansResampled, Method::KMeansWeighted, Method::KMeansBaseline,
                 Method::MeanShift, Method::AffinityPropagation}) {
    if (to_string(m) == name) return m;
  }
  if (name == "kmeans") return Method::KMeansResampled;
  if (name == "ap") return Method::AffinityPropagation;
  if (name == "ms") return Method::MeanShift;
  throw ValidationError("unknown clustering method '" + std::string(name) + "'");
}

std::size_t snap_to_data(const Matrix& data, std::span<const double> point) {
  if (data.rows() == 0) throw ValidationError("cannot snap to an empty dataset");
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const double d = squared_euclidean(data.row(i), point);
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  return best;
}

CharacteristicResult find_characteristic_samples(const Dataset& data,
                                                 std::span<const double> identifiability,
                                                 const FindOptions& options) {
  const std::size_t n = data.size();
  if (n == 0) throw ValidationError("cannot search characteristic samples in an empty dataset");
  if (identifiability.size() != n) {
    throw ValidationError("need exactly one identifiability value per sample");
  }
  check_weights(identifiability);
  const std::size_t m = options.m_draw == 0 ? n : options.m_draw;
  const std::uint64_t resample_seed = derive_seed(options.seed, {1});
  const std::uint64_t cluster_seed = derive_seed(options.seed, {2});

  CharacteristicResult out;
  auto resampled = [&] {
    return data.features().select_rows(weighted_resample(identifiability, m, resample_seed));
  };
  switch (options.method) {
    case Method::KMeansResampled: {
      auto pts = resampled();
      auto r = kmeans(pts, std::min(options.k, pts.rows()), {}, {.seed = cluster_seed});
      out.prototypes = std::move(r.prototypes);
      break;
    }
    case Method::KMeansWeighted: {
      auto r = kmeans(data.features(), std::min(options.k, n), identifiability, {.seed = cluster_seed});
      out.prototypes = std::move(r.prototypes);
      break;
    }
    case Method::KMeansBaseline: {
      auto r = kmeans(data.features(), std::min(options.k, n), {}, {.seed = cluster_seed});
      out.prototypes = std::move(r.prototypes);
      break;
    }
    case Method::MeanShift: {
      auto r = mean_shift(resampled(), options.mean_shift);
      out.prototypes = std::move(r.prototypes);
      break;
    }
    case Method::AffinityPropagation: {
      auto pts = resampled();
      if (pts.rows() < 2) {
        out.prototypes = {pts, "affinity-propagation"};
        break;
      }
      auto opts = options.affinity;
      if (!opts.jitter_seed) opts.jitter_seed = derive_seed(options.seed, {3});
      auto r = affinity_propagation(pts, opts);
      if (!r.converged) {
        out.warnings.push_back("affinity propagation did not converge after " +
                               std::to_string(r.iterations) + " iterations");
      }
      out.prototypes = std::move(r.prototypes);
      break;
    }
  }
  out.prototypes.method = std::string(to_string(options.method));

  for (std::size_t p = 0; p < out.prototypes.points.rows(); ++p) {
    const std::size_t idx = snap_to_data(data.features(), out.prototypes.points.row(p));
    auto dup = std::find_if(out.samples.begin(), out.samples.end(),
                            [idx](const CharacteristicSample& c) { return c.index == idx; });
    if (dup != out.samples.end()) continue;  // same member, same i value
    out.samples.push_back({idx, data.sample(idx), identifiability[idx], p});
  }
  return out;
}

double prototype_quality(const Matrix& prototypes,
                         const std::function<double(std::span<const double>)>& truth) {
  if (prototypes.rows() == 0) throw ValidationError("prototype quality of an empty set");
  double s = 0.0;
  for (std::size_t i = 0; i < prototypes.rows(); ++i) s += truth(prototypes.row(i));
  return s / static_cast<double>(prototypes.rows());
}

}  // namespace cfdrift::proto
