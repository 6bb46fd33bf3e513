#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cfdrift/random.hpp"
#include "cfdrift/types.hpp"

namespace cfdrift::synth {

/// Isotropic Gaussian component carrying a distribution over time bins.
struct GaussianComponent {
  FeatureVector mean;
  double sigma = 1.0;
  std::vector<double> time_weights;  // sums to 1, one entry per bin
};

/// Equally weighted mixture of isotropic Gaussians on ℝ^d × {1..n_bins}.
/// Everything is evaluated in the log domain, so posteriors stay accurate in
/// high dimension where the densities themselves underflow.
class GaussianMixtureModel {
 public:
  GaussianMixtureModel(std::vector<GaussianComponent> components, int n_bins);

  std::size_t dimension() const noexcept { return dim_; }
  int n_bins() const noexcept { return n_bins_; }
  const std::vector<GaussianComponent>& components() const noexcept { return components_; }

  /// Posterior over time bins, P(T = t | X = x). Falls back to the uniform
  /// posterior when every joint density is zero or not finite.
  TimePosterior posterior(std::span<const double> x) const;
  double identifiability(std::span<const double> x) const;
  /// Marginal density ℙ_X(x). Underflows to 0 far from all components.
  double density(std::span<const double> x) const;
  /// Characterizing function ℙ_X(x)·i(x).
  double characterizing(std::span<const double> x) const;

  /// Draws n samples. Throws EmptyBinError if some bin receives none.
  Dataset sample(std::size_t n, Rng& rng) const;
  /// Draws feature vectors only, ignoring time.
  Matrix sample_features(std::size_t n, Rng& rng) const;

  /// Same means and time weights, every sigma replaced.
  GaussianMixtureModel with_sigma(double sigma) const;

 private:
  void log_joint(std::span<const double> x, std::vector<double>& out) const;

  std::vector<GaussianComponent> components_;
  int n_bins_;
  std::size_t dim_;
};

/// Mixture with uniformly drawn means and n_class degrees of overlap:
/// component (i, j) has time weight (j/n_class)·δ₁ + (1 − j/n_class)·δ₂.
struct GmmSpec {
  std::size_t d = 2;
  std::size_t n_class = 2;
  std::size_t n_gauss_per_class = 2;
  double a = 10.0;      // means ~ U[-a, a]^d
  double sigma = 1.0;
  std::uint64_t seed = 0;  // drives the mean draw

  void validate() const;
  /// "d/n_gauss_per_class/n_class", the table encoding.
  std::string label() const;
};

GaussianMixtureModel make_model(const GmmSpec& spec);

Dataset sample_gmm(const GmmSpec& spec, std::size_t n, std::uint64_t rng_seed);
TimePosterior analytic_posterior(const GmmSpec& spec, std::span<const double> x);
double analytic_identifiability(const GmmSpec& spec, std::span<const double> x);
double analytic_characterizing(const GmmSpec& spec, std::span<const double> x);

/// g×g grid of equal cells on [0,1]². Cell id = row·g + column.
struct CheckerboardSpec {
  int grid = 3;
  std::vector<std::vector<int>> active_cells_per_bin;
  std::uint64_t seed = 0;

  void validate() const;
  int n_bins() const noexcept { return static_cast<int>(active_cells_per_bin.size()); }
  int n_cells() const noexcept { return grid * grid; }
};

/// Draws active sets per bin, each cell independently active with
/// probability ½, until every bin has an active cell and every pair of
/// consecutive bins shares at least one cell and differs in at least one.
CheckerboardSpec random_checkerboard_spec(int grid, int n_bins, std::uint64_t seed);

struct CheckerboardData {
  Dataset data;
  std::vector<double> i_true;
  std::vector<int> cell;           // cell id per sample
  std::vector<int> changed_cells;  // sorted, appear or vanish between consecutive bins
};

/// Cell containing x (points on the upper boundary belong to the last cell).
int checkerboard_cell(std::span<const double> x, int grid);

/// Cells that differ between consecutive bins (union of symmetric differences).
std::vector<int> changed_cells(const CheckerboardSpec& spec);

/// Posterior for equal per-bin sample counts: proportional to the bin's
/// uniform density at the cell.
TimePosterior checkerboard_posterior(const CheckerboardSpec& spec, std::span<const double> x);

/// Samples stream-ordered: all of bin 1, then bin 2, ...
CheckerboardData sample_checkerboard(const CheckerboardSpec& spec, std::size_t n_per_bin,
                                     std::uint64_t rng_seed);

struct RelabeledData {
  Dataset data;
  std::vector<double> i_true;
};

/// Min-max normalizes y, draws t = 2 with probability y (t = 1 otherwise),
/// ground truth i = 1 − H(Ber(y))/log 2. Throws on a constant target.
RelabeledData relabel_regression(const Matrix& x, std::span<const double> y, std::uint64_t rng_seed);

/// Draws an occurrence probability p_c ~ U[0,1] per class (classes in
/// ascending label order), then t = 2 with probability p_c.
RelabeledData relabel_classification(const Matrix& x, std::span<const long long> labels,
                                     std::uint64_t rng_seed);

/// Same as relabel_classification with the per-class probabilities fixed.
RelabeledData relabel_classification(const Matrix& x, std::span<const long long> labels,
                                     const std::map<long long, double>& class_probability,
                                     std::uint64_t rng_seed);

}  // namespace cfdrift::synth
