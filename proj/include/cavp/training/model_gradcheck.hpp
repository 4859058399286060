// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "cavp/autodiff/gradcheck.hpp"
#include "cavp/model/config.hpp"

namespace cavp::training {

struct ModelGradcheckOptions {
  ad::GradcheckOptions check;
  std::uint64_t seed = 0;
  int seeds = 20;
  /// Cloning weight for the composed xe-phase loss.
  double lambda = 0.1;
};

/// Full-model checks on the miniature configuration: the teacher-forced XE
/// loss for every variant and XE + lambda * cloning for variants with an
/// output sub-policy. Each entry holds the worst error over all seeds.
std::vector<ad::GradcheckEntry> check_model_gradients(const ModelGradcheckOptions& options);

/// Primitive suite followed by the model suite.
std::vector<ad::GradcheckEntry> run_gradcheck_suite(const ModelGradcheckOptions& options);

}  // namespace cavp::training
