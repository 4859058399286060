// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include "cavp/common/random.hpp"
#include "cavp/data/vocabulary.hpp"
#include "cavp/metrics/cider.hpp"
#include "cavp/metrics/reward.hpp"
#include "cavp/model/model.hpp"

namespace cavp::training {

struct ScstDiagnostics {
  double sample_reward = 0.0;
  double greedy_reward = 0.0;
  double advantage = 0.0;
  /// Sum of log pi(y^s_t) of the sample under the current parameters.
  double sample_log_prob = 0.0;
  std::vector<int> sample_tokens;
  bool skipped = false;
};

template <typename T>
struct ScstStep {
  ad::GradientMap<T> gradients;
  ScstDiagnostics diagnostics;
};

struct ScstContext {
  const data::Vocabulary* vocab = nullptr;
  metrics::RewardKind reward = metrics::RewardKind::kCiderD;
  /// Required for CIDEr-D.
  const metrics::TfIdfIndex* index = nullptr;
};

/// One self-critical step on one image: sample y^s, decode the greedy
/// baseline with the current parameters, A = r(y^s) - r(greedy), and the
/// gradient of -A * sum_t log pi(y^s_t). Special tokens are stripped before
/// scoring. A = 0 returns an exactly zero gradient; an empty sample is
/// skipped with a warning.
template <typename T>
ScstStep<T> scst_step(const CaptionModel<T>& model, const RegionFeatureSet& features, std::span<const metrics::TokenSequence> references,
                      const ScstContext& context, Rng& rng);

/// Gradient of -A * sum_t log pi(y_t) for a fixed token sequence.
template <typename T>
ad::GradientMap<T> policy_gradient(const CaptionModel<T>& model, const RegionFeatureSet& features, std::span<const int> tokens, double advantage);

}  // namespace cavp::training
