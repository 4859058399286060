// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include "cavp/metrics/ngram.hpp"

namespace cavp::metrics {

/// Exact-match METEOR parameters.
struct MeteorParams {
  double alpha = 0.9;
  double gamma = 0.5;
  double theta = 3.0;
};

/// Best unigram alignment between two token sequences: the maximum number
/// of exact matches, and among those the fewest chunks.
struct Alignment {
  int matches = 0;
  int chunks = 0;
};

/// Branch-and-bound search; exact unless the node budget runs out, in which
/// case the best alignment found so far is returned.
Alignment align_exact(const TokenSequence& candidate, const TokenSequence& reference, long node_budget = 2'000'000);

/// F_mean * (1 - penalty) for one reference pair.
double meteor_from_alignment(const Alignment& a, std::size_t candidate_len, std::size_t reference_len, const MeteorParams& p = {});

/// Maximum over references.
double meteor_lite(const TokenSequence& candidate, std::span<const TokenSequence> references, const MeteorParams& p = {});

}  // namespace cavp::metrics
