// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <string_view>

#include "cavp/metrics/cider.hpp"
#include "cavp/metrics/ngram.hpp"

namespace cavp::metrics {

enum class RewardKind { kBleu4, kRougeL, kMeteorLite, kCiderD };

std::string_view reward_name(RewardKind kind);
/// Accepts bleu4, rougeL, meteorlite, ciderD (case-insensitive).
RewardKind parse_reward_kind(std::string_view name);

/// Sentence-level reward. An empty candidate scores 0. `index` is required
/// for ciderD and ignored otherwise.
double reward(const TokenSequence& candidate, std::span<const TokenSequence> references, RewardKind kind,
              const TfIdfIndex* index = nullptr);

}  // namespace cavp::metrics
