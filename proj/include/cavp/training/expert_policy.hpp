// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <vector>

#include "cavp/data/records.hpp"

namespace cavp::training {

/// Per-step target over the output sub-policy choices (single, composition).
struct ExpertOutputPolicy {
  std::vector<std::array<double, 2>> targets;

  std::size_t size() const { return targets.size(); }
  /// Throws ContractError unless every entry lies on the simplex.
  void validate() const;
};

/// Relation words -> (0, 1); other lexicon words -> (1, 0); anything the
/// lexicon does not know (including special tokens) -> (0.5, 0.5).
std::array<double, 2> expert_target(std::string_view token, const data::Lexicon& lexicon);

ExpertOutputPolicy build_expert_policy(const data::TokenSequence& tokens, const data::Lexicon& lexicon);

}  // namespace cavp::training
