// SPDX-License-Identifier: Apache-2.0
#include "cavp/training/expert_policy.hpp"

#include <cmath>

#include "cavp/common/errors.hpp"

namespace cavp::training {

void ExpertOutputPolicy::validate() const {
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const auto& p = targets[t];
    if (p[0] < 0.0 || p[1] < 0.0 || std::abs(p[0] + p[1] - 1.0) > 1e-12) {
      throw ContractError("expert policy: step " + std::to_string(t) + " is not a distribution");
    }
  }
}

std::array<double, 2> expert_target(std::string_view token, const data::Lexicon& lexicon) {
  const auto cat = lexicon.category(token);
  if (!cat) return {0.5, 0.5};
  if (*cat == data::LexCategory::kRelation) return {0.0, 1.0};
  return {1.0, 0.0};
}

ExpertOutputPolicy build_expert_policy(const data::TokenSequence& tokens, const data::Lexicon& lexicon) {
  ExpertOutputPolicy e;
  e.targets.reserve(tokens.size());
  for (const auto& t : tokens) e.targets.push_back(expert_target(t, lexicon));
  return e;
}

}  // namespace cavp::training
