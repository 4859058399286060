// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>

namespace cavp {

using Rng = std::mt19937_64;

/// Stateless 64-bit mixer; used wherever a value must be a pure function of
/// its inputs (dataset splits, per-image seeds).
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b));
}

/// Uniform double in [0, 1) built from the top 53 bits of one draw.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Draws an index from an unnormalized non-negative weight vector.
std::size_t sample_categorical(std::span<const double> probs, Rng& rng);

std::string serialize_rng(const Rng& rng);
Rng deserialize_rng(const std::string& state);

}  // namespace cavp
