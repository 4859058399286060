// SPDX-License-Identifier: Apache-2.0
#include "cavp/metrics/rouge.hpp"

#include <algorithm>
#include <vector>

#include "cavp/common/errors.hpp"

namespace cavp::metrics {

std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(const TokenSequence& candidate, std::span<const TokenSequence> references) {
  if (references.empty()) throw ContractError("rouge_l: empty reference set");
  double best = 0.0;
  for (const auto& ref : references) {
    if (candidate.empty() || ref.empty()) continue;
    const double lcs = static_cast<double>(lcs_length(candidate, ref));
    if (lcs == 0.0) continue;
    const double p = lcs / static_cast<double>(candidate.size());
    const double r = lcs / static_cast<double>(ref.size());
    const double b2 = kRougeBeta * kRougeBeta;
    best = std::max(best, (1.0 + b2) * p * r / (r + b2 * p));
  }
  return best;
}

}  // namespace cavp::metrics
