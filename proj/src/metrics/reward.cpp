// SPDX-License-Identifier: Apache-2.0
#include "cavp/metrics/reward.hpp"

#include <algorithm>
#include <cctype>

#include "cavp/common/errors.hpp"
#include "cavp/metrics/bleu.hpp"
#include "cavp/metrics/meteor.hpp"
#include "cavp/metrics/rouge.hpp"

namespace cavp::metrics {

std::string_view reward_name(RewardKind kind) {
  switch (kind) {
    case RewardKind::kBleu4: return "bleu4";
    case RewardKind::kRougeL: return "rougeL";
    case RewardKind::kMeteorLite: return "meteorlite";
    case RewardKind::kCiderD: return "ciderD";
  }
  return "unknown";
}

RewardKind parse_reward_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "bleu4") return RewardKind::kBleu4;
  if (lower == "rougel") return RewardKind::kRougeL;
  if (lower == "meteorlite") return RewardKind::kMeteorLite;
  if (lower == "ciderd") return RewardKind::kCiderD;
  throw ContractError("unknown reward '" + std::string(name) + "' (choices: bleu4, rougeL, meteorlite, ciderD)");
}

double reward(const TokenSequence& candidate, std::span<const TokenSequence> references, RewardKind kind, const TfIdfIndex* index) {
  if (references.empty()) throw ContractError("reward: empty reference set");
  if (candidate.empty()) return 0.0;
  switch (kind) {
    case RewardKind::kBleu4: return bleu(candidate, references, 4);
    case RewardKind::kRougeL: return rouge_l(candidate, references);
    case RewardKind::kMeteorLite: return meteor_lite(candidate, references);
    case RewardKind::kCiderD:
      if (index == nullptr) throw ContractError("reward: ciderD needs a tf-idf index");
      return cider_d(candidate, references, *index);
  }
  return 0.0;
}

}  // namespace cavp::metrics
