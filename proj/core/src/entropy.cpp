#include "cfdrift/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cfdrift/errors.hpp"

namespace cfdrift {

double entropy(const TimePosterior& p) {
  double h = 0.0;
  for (double v : p.probabilities()) {
    if (v > 0.0) h -= v * std::log(v);
  }
  const double upper = std::log(static_cast<double>(p.n_bins()));
  return std::clamp(h, 0.0, upper);
}

double identifiability(const TimePosterior& p) {
  if (p.n_bins() < 2) {
    throw UnsupportedConfigError("identifiability needs at least two time bins");
  }
  const double value = 1.0 - entropy(p) / std::log(static_cast<double>(p.n_bins()));
  return std::clamp(value, 0.0, 1.0);
}

double mean_identifiability(std::span<const double> scores) {
  if (scores.empty()) throw ValidationError("mean identifiability of an empty sequence");
  return std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
}

double bernoulli_identifiability(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("Bernoulli parameter outside [0, 1]");
  return identifiability(TimePosterior::from_probabilities({1.0 - p, p}));
}

}  // namespace cfdrift
