#include "cfdrift/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <string>

#include "cfdrift/entropy.hpp"
#include "cfdrift/errors.hpp"

namespace cfdrift::synth {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_gaussian(std::span<const double> x, std::span<const double> mean, double sigma) {
  const double d = static_cast<double>(x.size());
  return -0.5 * d * std::log(2.0 * std::numbers::pi * sigma * sigma) -
         squared_euclidean(x, mean) / (2.0 * sigma * sigma);
}

double log_sum_exp(std::span<const double> v) {
  double m = kNegInf;
  for (double e : v) m = std::max(m, e);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double e : v) s += std::exp(e - m);
  return m + std::log(s);
}

}  // namespace

GaussianMixtureModel::GaussianMixtureModel(std::vector<GaussianComponent> components, int n_bins)
    : components_(std::move(components)), n_bins_(n_bins), dim_(0) {
  if (components_.empty()) throw ValidationError("mixture needs at least one component");
  if (n_bins_ < 1) throw ValidationError("mixture needs at least one time bin");
  dim_ = components_.front().mean.size();
  if (dim_ == 0) throw ValidationError("mixture dimension must be at least 1");
  for (const auto& c : components_) {
    if (c.mean.size() != dim_) throw ValidationError("component means differ in dimension");
    if (!(c.sigma > 0.0)) throw ValidationError("component sigma must be positive");
    if (c.time_weights.size() != static_cast<std::size_t>(n_bins_)) {
      throw ValidationError("component time weights must have one entry per bin");
    }
    double s = 0.0;
    for (double w : c.time_weights) {
      if (!(w >= 0.0)) throw ValidationError("negative component time weight");
      s += w;
    }
    if (std::abs(s - 1.0) > 1e-9) throw ValidationError("component time weights must sum to 1");
  }
}

void GaussianMixtureModel::log_joint(std::span<const double> x, std::vector<double>& out) const {
  if (x.size() != dim_) throw ValidationError("point dimension does not match the mixture");
  const double log_prior = -std::log(static_cast<double>(components_.size()));
  std::vector<double> terms(components_.size());
  out.assign(static_cast<std::size_t>(n_bins_), kNegInf);
  std::vector<double> log_dens(components_.size());
  for (std::size_t c = 0; c < components_.size(); ++c) {
    log_dens[c] = log_prior + log_gaussian(x, components_[c].mean, components_[c].sigma);
  }
  for (std::size_t t = 0; t < out.size(); ++t) {
    for (std::size_t c = 0; c < components_.size(); ++c) {
      const double w = components_[c].time_weights[t];
      terms[c] = w > 0.0 ? log_dens[c] + std::log(w) : kNegInf;
    }
    out[t] = log_sum_exp(terms);
  }
}

TimePosterior GaussianMixtureModel::posterior(std::span<const double> x) const {
  std::vector<double> lj;
  log_joint(x, lj);
  const double total = log_sum_exp(lj);
  if (!std::isfinite(total)) return TimePosterior::uniform(lj.size());
  double s = 0.0;
  for (double& v : lj) {
    v = std::exp(v - total);
    s += v;
  }
  for (double& v : lj) v /= s;
  return TimePosterior::from_probabilities(std::move(lj));
}

double GaussianMixtureModel::identifiability(std::span<const double> x) const {
  return cfdrift::identifiability(posterior(x));
}

double GaussianMixtureModel::density(std::span<const double> x) const {
  if (x.size() != dim_) throw ValidationError("point dimension does not match the mixture");
  double s = 0.0;
  for (const auto& c : components_) s += std::exp(log_gaussian(x, c.mean, c.sigma));
  return s / static_cast<double>(components_.size());
}

double GaussianMixtureModel::characterizing(std::span<const double> x) const {
  const double p = density(x);
  if (p == 0.0) return 0.0;
  return p * identifiability(x);
}

Matrix GaussianMixtureModel::sample_features(std::size_t n, Rng& rng) const {
  std::uniform_int_distribution<std::size_t> pick(0, components_.size() - 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(n, dim_);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = components_[pick(rng)];
    auto row = out.row(i);
    for (std::size_t k = 0; k < dim_; ++k) row[k] = c.mean[k] + c.sigma * normal(rng);
  }
  return out;
}

Dataset GaussianMixtureModel::sample(std::size_t n, Rng& rng) const {
  std::uniform_int_distribution<std::size_t> pick(0, components_.size() - 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix x(n, dim_);
  std::vector<TimeBin> bins(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = components_[pick(rng)];
    auto row = x.row(i);
    for (std::size_t k = 0; k < dim_; ++k) row[k] = c.mean[k] + c.sigma * normal(rng);
    const double u = unit(rng);
    double acc = 0.0;
    int t = n_bins_;
    for (int b = 0; b < n_bins_; ++b) {
      acc += c.time_weights[static_cast<std::size_t>(b)];
      if (u < acc) {
        t = b + 1;
        break;
      }
    }
    bins[i] = TimeBin{t};
  }
  return Dataset(std::move(x), std::move(bins), n_bins_);
}

GaussianMixtureModel GaussianMixtureModel::with_sigma(double sigma) const {
  auto comps = components_;
  for (auto& c : comps) c.sigma = sigma;
  return GaussianMixtureModel(std::move(comps), n_bins_);
}

void GmmSpec::validate() const {
  if (d < 1) throw ValidationError("GMM dimension must be at least 1");
  if (n_class < 1) throw ValidationError("GMM n_class must be at least 1");
  if (n_gauss_per_class < 1) throw ValidationError("GMM n_gauss_per_class must be at least 1");
  if (!(a > 0.0) || !std::isfinite(a)) throw ValidationError("GMM half-width a must be positive");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ValidationError("GMM sigma must be positive");
}

std::string GmmSpec::label() const {
  return std::to_string(d) + "/" + std::to_string(n_gauss_per_class) + "/" +
         std::to_string(n_class);
}

GaussianMixtureModel make_model(const GmmSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::uniform_real_distribution<double> box(-spec.a, spec.a);
  std::vector<GaussianComponent> comps;
  comps.reserve(spec.n_gauss_per_class * spec.n_class);
  for (std::size_t i = 0; i < spec.n_gauss_per_class; ++i) {
    for (std::size_t j = 1; j <= spec.n_class; ++j) {
      GaussianComponent c;
      c.mean.resize(spec.d);
      for (auto& m : c.mean) m = box(rng);
      c.sigma = spec.sigma;
      const double w = static_cast<double>(j) / static_cast<double>(spec.n_class);
      c.time_weights = {w, 1.0 - w};
      comps.push_back(std::move(c));
    }
  }
  return GaussianMixtureModel(std::move(comps), 2);
}

Dataset sample_gmm(const GmmSpec& spec, std::size_t n, std::uint64_t rng_seed) {
  if (n < 1) throw ValidationError("sample count must be at least 1");
  auto model = make_model(spec);
  Rng rng(rng_seed);
  return model.sample(n, rng);
}

TimePosterior analytic_posterior(const GmmSpec& spec, std::span<const double> x) {
  return make_model(spec).posterior(x);
}

double analytic_identifiability(const GmmSpec& spec, std::span<const double> x) {
  return make_model(spec).identifiability(x);
}

double analytic_characterizing(const GmmSpec& spec, std::span<const double> x) {
  return make_model(spec).characterizing(x);
}

void CheckerboardSpec::validate() const {
  if (grid < 1) throw ValidationError("checkerboard grid must be at least 1x1");
  if (active_cells_per_bin.empty()) throw ValidationError("checkerboard needs at least one bin");
  for (const auto& cells : active_cells_per_bin) {
    if (cells.empty()) throw ValidationError("every checkerboard bin needs an active cell");
    std::set<int> seen;
    for (int c : cells) {
      if (c < 0 || c >= n_cells()) throw ValidationError("checkerboard cell id out of range");
      if (!seen.insert(c).second) throw ValidationError("duplicate checkerboard cell id");
    }
  }
}

CheckerboardSpec random_checkerboard_spec(int grid, int n_bins, std::uint64_t seed) {
  if (grid < 2) throw ValidationError("random checkerboard needs at least a 2x2 grid");
  if (n_bins < 2) throw ValidationError("random checkerboard needs at least two bins");
  Rng rng(seed);
  std::bernoulli_distribution coin(0.5);
  const int cells = grid * grid;
  for (;;) {
    CheckerboardSpec spec{grid, {}, seed};
    for (int b = 0; b < n_bins; ++b) {
      std::vector<int> active;
      for (int c = 0; c < cells; ++c) {
        if (coin(rng)) active.push_back(c);
      }
      spec.active_cells_per_bin.push_back(std::move(active));
    }
    bool ok = true;
    for (int b = 0; b < n_bins && ok; ++b) {
      if (spec.active_cells_per_bin[static_cast<std::size_t>(b)].empty()) ok = false;
    }
    for (int b = 0; b + 1 < n_bins && ok; ++b) {
      const auto& p = spec.active_cells_per_bin[static_cast<std::size_t>(b)];
      const auto& q = spec.active_cells_per_bin[static_cast<std::size_t>(b + 1)];
      std::vector<int> shared, diff;
      std::set_intersection(p.begin(), p.end(), q.begin(), q.end(), std::back_inserter(shared));
      std::set_symmetric_difference(p.begin(), p.end(), q.begin(), q.end(),
                                    std::back_inserter(diff));
      ok = !shared.empty() && !diff.empty();
    }
    if (ok) return spec;
  }
}

int checkerboard_cell(std::span<const double> x, int grid) {
  if (x.size() != 2) throw ValidationError("checkerboard points are two-dimensional");
  auto axis = [grid](double v) {
    return std::clamp(static_cast<int>(std::floor(v * grid)), 0, grid - 1);
  };
  return axis(x[1]) * grid + axis(x[0]);
}

std::vector<int> changed_cells(const CheckerboardSpec& spec) {
  spec.validate();
  std::set<int> out;
  for (std::size_t b = 0; b + 1 < spec.active_cells_per_bin.size(); ++b) {
    auto p = spec.active_cells_per_bin[b];
    auto q = spec.active_cells_per_bin[b + 1];
    std::sort(p.begin(), p.end());
    std::sort(q.begin(), q.end());
    std::vector<int> diff;
    std::set_symmetric_difference(p.begin(), p.end(), q.begin(), q.end(), std::back_inserter(diff));
    out.insert(diff.begin(), diff.end());
  }
  return {out.begin(), out.end()};
}

TimePosterior checkerboard_posterior(const CheckerboardSpec& spec, std::span<const double> x) {
  const int cell = checkerboard_cell(x, spec.grid);
  std::vector<double> dens;
  double total = 0.0;
  for (const auto& active : spec.active_cells_per_bin) {
    const bool on = std::find(active.begin(), active.end(), cell) != active.end();
    const double v = on ? 1.0 / static_cast<double>(active.size()) : 0.0;
    dens.push_back(v);
    total += v;
  }
  if (total == 0.0) return TimePosterior::uniform(dens.size());
  for (double& v : dens) v /= total;
  return TimePosterior::from_probabilities(std::move(dens));
}

CheckerboardData sample_checkerboard(const CheckerboardSpec& spec, std::size_t n_per_bin,
                                     std::uint64_t rng_seed) {
  spec.validate();
  if (n_per_bin < 1) throw ValidationError("n_per_bin must be at least 1");
  Rng rng(rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double width = 1.0 / spec.grid;
  Matrix x(0, 2);
  std::vector<TimeBin> bins;
  CheckerboardData out;
  for (int b = 0; b < spec.n_bins(); ++b) {
    const auto& active = spec.active_cells_per_bin[static_cast<std::size_t>(b)];
    std::uniform_int_distribution<std::size_t> pick(0, active.size() - 1);
    for (std::size_t k = 0; k < n_per_bin; ++k) {
      const int cell = active[pick(rng)];
      const double px = (cell % spec.grid + unit(rng)) * width;
      const double py = (cell / spec.grid + unit(rng)) * width;
      const double row[2] = {px, py};
      x.append_row(row);
      bins.push_back(TimeBin{b + 1});
      out.cell.push_back(cell);
    }
  }
  out.data = Dataset(std::move(x), std::move(bins), spec.n_bins());
  out.i_true.reserve(out.data.size());
  if (spec.n_bins() >= 2) {
    for (std::size_t i = 0; i < out.data.size(); ++i) {
      out.i_true.push_back(identifiability(checkerboard_posterior(spec, out.data.x(i))));
    }
  }
  out.changed_cells = changed_cells(spec);
  return out;
}

RelabeledData relabel_regression(const Matrix& x, std::span<const double> y, std::uint64_t rng_seed) {
  if (x.rows() != y.size()) throw ValidationError("feature rows and targets differ in length");
  if (y.empty()) throw ValidationError("no samples to relabel");
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  if (!std::isfinite(*lo) || !std::isfinite(*hi)) throw ValidationError("non-finite target value");
  if (*hi == *lo) throw ValidationError("constant target column cannot be normalized");
  const double low = *lo, span = *hi - *lo;
  Rng rng(rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<TimeBin> bins;
  RelabeledData out;
  bins.reserve(y.size());
  out.i_true.reserve(y.size());
  for (double v : y) {
    const double p = std::clamp((v - low) / span, 0.0, 1.0);
    bins.push_back(TimeBin{unit(rng) < p ? 2 : 1});
    out.i_true.push_back(bernoulli_identifiability(p));
  }
  out.data = Dataset(x, std::move(bins), 2);
  return out;
}

RelabeledData relabel_classification(const Matrix& x, std::span<const long long> labels,
                                     std::uint64_t rng_seed) {
  std::set<long long> classes(labels.begin(), labels.end());
  if (classes.empty()) throw ValidationError("no classes to relabel");
  Rng rng(rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::map<long long, double> probs;
  for (auto c : classes) probs[c] = unit(rng);
  return relabel_classification(x, labels, probs, derive_seed(rng_seed, {1}));
}

RelabeledData relabel_classification(const Matrix& x, std::span<const long long> labels,
                                     const std::map<long long, double>& class_probability,
                                     std::uint64_t rng_seed) {
  if (x.rows() != labels.size()) throw ValidationError("feature rows and labels differ in length");
  Rng rng(rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<TimeBin> bins;
  RelabeledData out;
  for (auto c : labels) {
    auto it = class_probability.find(c);
    if (it == class_probability.end()) {
      throw ValidationError("no occurrence probability for class " + std::to_string(c));
    }
    const double p = it->second;
    bins.push_back(TimeBin{unit(rng) < p ? 2 : 1});
    out.i_true.push_back(bernoulli_identifiability(p));
  }
  out.data = Dataset(x, std::move(bins), 2);
  return out;
}

}  // namespace cfdrift::synth
