#pragma once

#include <span>

#include "cfdrift/types.hpp"

namespace cfdrift {

/// Shannon entropy in nats, with 0·log 0 = 0. Lies in [0, log n_bins].
double entropy(const TimePosterior& p);

/// Identifiability 1 − H(p)/log(n_bins), clamped to [0, 1].
/// Zero iff p is uniform, one iff p is a point mass.
/// Throws UnsupportedConfigError when n_bins < 2.
double identifiability(const TimePosterior& p);

/// Empirical drift indicator: mean identifiability over samples. A nonzero
/// population value means the per-bin distributions differ.
double mean_identifiability(std::span<const double> scores);

/// Identifiability of a Bernoulli(p) time assignment over two bins,
/// 1 − H₂(p).
double bernoulli_identifiability(double p);

}  // namespace cfdrift
