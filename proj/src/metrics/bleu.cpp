// SPDX-License-Identifier: Apache-2.0
#include "cavp/metrics/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "cavp/common/errors.hpp"

namespace cavp::metrics {

void BleuStats::add(const BleuStats& other) {
  if (matches.empty()) {
    *this = other;
    return;
  }
  if (other.matches.size() != matches.size()) throw ContractError("bleu: mixing statistics of different orders");
  for (std::size_t n = 0; n < matches.size(); ++n) {
    matches[n] += other.matches[n];
    totals[n] += other.totals[n];
  }
  candidate_length += other.candidate_length;
  reference_length += other.reference_length;
}

BleuStats bleu_stats(const TokenSequence& candidate, std::span<const TokenSequence> references, int max_n) {
  if (references.empty()) throw ContractError("bleu: empty reference set");
  if (max_n < 1) throw ContractError("bleu: max order must be >= 1");
  BleuStats s;
  s.matches.assign(static_cast<std::size_t>(max_n), 0.0);
  s.totals.assign(static_cast<std::size_t>(max_n), 0.0);
  s.candidate_length = static_cast<double>(candidate.size());

  std::size_t best_len = references[0].size();
  long best_diff = std::labs(static_cast<long>(best_len) - static_cast<long>(candidate.size()));
  for (const auto& ref : references) {
    const long diff = std::labs(static_cast<long>(ref.size()) - static_cast<long>(candidate.size()));
    if (diff < best_diff || (diff == best_diff && ref.size() < best_len)) {
      best_diff = diff;
      best_len = ref.size();
    }
  }
  s.reference_length = static_cast<double>(best_len);

  for (int n = 1; n <= max_n; ++n) {
    const NgramCounts cand = count_ngrams(candidate, n);
    NgramCounts max_ref;
    for (const auto& ref : references) {
      for (const auto& [g, c] : count_ngrams(ref, n)) max_ref[g] = std::max(max_ref[g], c);
    }
    double matched = 0.0, total = 0.0;
    for (const auto& [g, c] : cand) {
      total += c;
      auto it = max_ref.find(g);
      if (it != max_ref.end()) matched += std::min(c, it->second);
    }
    s.matches[static_cast<std::size_t>(n - 1)] = matched;
    s.totals[static_cast<std::size_t>(n - 1)] = total;
  }
  return s;
}

double bleu_from_stats(const BleuStats& stats, bool smooth) {
  const std::size_t orders = stats.matches.size();
  if (orders == 0 || stats.candidate_length <= 0.0) return 0.0;
  if (stats.matches[0] <= 0.0) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 0; n < orders; ++n) {
    double p = stats.totals[n] > 0.0 ? stats.matches[n] / stats.totals[n] : 0.0;
    if (p <= 0.0) {
      if (!smooth) return 0.0;
      p = kBleuSmoothing;
    }
    log_sum += std::log(p);
  }
  const double geo = std::exp(log_sum / static_cast<double>(orders));
  const double c = stats.candidate_length, r = stats.reference_length;
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return std::clamp(geo * bp, 0.0, 1.0);
}

double bleu(const TokenSequence& candidate, std::span<const TokenSequence> references, int max_n) {
  if (candidate.empty()) throw ContractError("bleu: empty candidate");
  return bleu_from_stats(bleu_stats(candidate, references, max_n), true);
}

double corpus_bleu(std::span<const TokenSequence> candidates, std::span<const std::vector<TokenSequence>> references, int max_n) {
  if (candidates.size() != references.size()) throw ContractError("corpus_bleu: candidate/reference count mismatch");
  if (candidates.empty()) return 0.0;
  BleuStats total;
  for (std::size_t i = 0; i < candidates.size(); ++i) total.add(bleu_stats(candidates[i], references[i], max_n));
  return bleu_from_stats(total, false);
}

}  // namespace cavp::metrics
