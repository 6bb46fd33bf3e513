#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfdrift/types.hpp"

namespace cfdrift::proto {

/// Draws m indices in [0, weights.size()) independently with probability
/// proportional to the weights; uniformly when every weight is zero.
/// Throws ValidationError on a negative or non-finite weight.
std::vector<std::size_t> weighted_resample(std::span<const double> weights, std::size_t m,
                                           std::uint64_t seed);

/// As above, checking that there is one weight per dataset sample.
std::vector<std::size_t> weighted_resample(const Dataset& data, std::span<const double> weights,
                                           std::size_t m, std::uint64_t seed);

/// Cluster prototypes; not necessarily members of the clustered set.
struct PrototypeSet {
  Matrix points;
  std::string method;
};

struct KMeansOptions {
  std::size_t max_iter = 300;
  std::uint64_t seed = 0;
};

struct KMeansResult {
  PrototypeSet prototypes;
  std::vector<std::size_t> labels;
  /// Weighted inertia after every assignment step; nonincreasing.
  std::vector<double> inertia_history;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Lloyd iterations after greedy k-means++ seeding. With weights, seeding
/// and centroid updates are weight-proportional (all-zero weights act as
/// uniform). An emptied cluster is reseeded at the point farthest from its
/// current centroid.
KMeansResult kmeans(const Matrix& points, std::size_t k, std::span<const double> weights = {},
                    KMeansOptions options = {});

struct MeanShiftOptions {
  std::optional<double> bandwidth;  // median pairwise distance when empty
  std::size_t max_iter = 300;
  double tolerance = 1e-4;  // convergence step, relative to the bandwidth
};

struct MeanShiftResult {
  PrototypeSet prototypes;
  std::vector<std::size_t> support;  // starting points that converged to each mode
  double bandwidth = 0.0;
};

/// Gaussian-kernel mean shift started from every point. Modes closer than
/// bandwidth/2 merge into the one with the larger support.
MeanShiftResult mean_shift(const Matrix& points, MeanShiftOptions options = {});

/// Median of all pairwise Euclidean distances.
double median_pairwise_distance(const Matrix& points);

struct AffinityOptions {
  std::optional<double> preference;  // median off-diagonal similarity when empty
  double damping = 0.5;
  std::size_t max_iter = 200;
  std::size_t convergence_iter = 15;
  /// When set, similarities get a tiny seeded perturbation that breaks the
  /// degeneracies caused by duplicate points.
  std::optional<std::uint64_t> jitter_seed;
};

struct AffinityResult {
  PrototypeSet prototypes;
  std::vector<std::size_t> exemplars;  // indices into the clustered points
  bool converged = false;
  std::size_t iterations = 0;
};

/// Responsibility/availability message passing on s = −‖x − x'‖².
/// Non-convergence is reported through `converged`, not thrown. If no point
/// ends up as its own exemplar the one with the largest self-evidence is used.
AffinityResult affinity_propagation(const Matrix& points, AffinityOptions options = {});

/// Same algorithm on a precomputed similarity matrix whose diagonal already
/// holds the preferences.
AffinityResult affinity_propagation_similarity(const Matrix& similarity, AffinityOptions options);

enum class Method { KMeansResampled, KMeansWeighted, KMeansBaseline, MeanShift, AffinityPropagation };

std::string_view to_string(Method m) noexcept;
/// Accepts kmeans-resampled, kmeans-weighted, kmeans-baseline, mean-shift,
/// affinity-propagation.
Method parse_method(std::string_view name);

struct CharacteristicSample {
  std::size_t index = 0;  // row in the input dataset
  TimedSample sample;
  double i_value = 0.0;
  std::size_t prototype = 0;
};

struct FindOptions {
  Method method = Method::KMeansResampled;
  std::size_t m_draw = 0;  // resample size; 0 means |data|
  std::size_t k = 10;      // k-means prototype count
  std::uint64_t seed = 0;
  MeanShiftOptions mean_shift;
  AffinityOptions affinity;
};

struct CharacteristicResult {
  std::vector<CharacteristicSample> samples;
  PrototypeSet prototypes;
  std::vector<std::string> warnings;
};

/// Resamples by identifiability (resampling methods), clusters, snaps each
/// prototype to its nearest dataset member (ties to the lower index) and
/// deduplicates, keeping the highest-i entry.
CharacteristicResult find_characteristic_samples(const Dataset& data,
                                                 std::span<const double> identifiability,
                                                 const FindOptions& options);

/// Nearest dataset row, ties to the lower index.
std::size_t snap_to_data(const Matrix& data, std::span<const double> point);

/// Mean of truth(x) over prototype points. Throws on an empty set.
double prototype_quality(const Matrix& prototypes,
                         const std::function<double(std::span<const double>)>& truth);

}  // namespace cfdrift::proto
