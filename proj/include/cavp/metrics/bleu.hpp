// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "cavp/metrics/ngram.hpp"

namespace cavp::metrics {

/// Sufficient statistics for BLEU: clipped matches and candidate n-gram
/// totals per order, candidate length and the closest reference length
/// (ties resolved to the shorter reference).
struct BleuStats {
  std::vector<double> matches;
  std::vector<double> totals;
  double candidate_length = 0.0;
  double reference_length = 0.0;

  void add(const BleuStats& other);
};

BleuStats bleu_stats(const TokenSequence& candidate, std::span<const TokenSequence> references, int max_n = 4);

/// Added to zero higher-order precisions at sentence level.
inline constexpr double kBleuSmoothing = 1e-9;

/// Geometric mean of modified precisions times the brevity penalty. With
/// `smooth`, zero precisions of order >= 2 become kBleuSmoothing; a zero
/// unigram precision always yields 0.
double bleu_from_stats(const BleuStats& stats, bool smooth);

/// Sentence-level (smoothed) BLEU. Throws ContractError on an empty
/// candidate or an empty reference set.
double bleu(const TokenSequence& candidate, std::span<const TokenSequence> references, int max_n = 4);

/// Corpus-level BLEU (pooled statistics, no smoothing).
double corpus_bleu(std::span<const TokenSequence> candidates, std::span<const std::vector<TokenSequence>> references, int max_n = 4);

}  // namespace cavp::metrics
