#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace cfdrift {

using Rng = std::mt19937_64;

/// Mixes a base seed with stream identifiers (run index, config index, ...)
/// into an independent 64-bit seed. SplitMix64 finalizer per component.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> ids) noexcept;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace cfdrift
