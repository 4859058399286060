// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include "cavp/metrics/ngram.hpp"

namespace cavp::metrics {

inline constexpr double kRougeBeta = 1.2;

std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b);

/// LCS F-measure (beta = 1.2), maximized over references.
double rouge_l(const TokenSequence& candidate, std::span<const TokenSequence> references);

}  // namespace cavp::metrics
