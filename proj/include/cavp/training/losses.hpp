// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <span>

#include "cavp/autodiff/ops.hpp"
#include "cavp/model/model.hpp"
#include "cavp/training/expert_policy.hpp"

namespace cavp::training {

/// KL(p || q) over two outcomes; terms with p = 0 contribute nothing.
double kl_divergence(const std::array<double, 2>& p, const std::array<double, 2>& q);

/// Mean over steps of KL(expert || output policy), built from the output
/// sub-policy log-probabilities (1 x 2 each).
template <typename T>
ad::Var<T> cloning_loss(ad::Tape<T>& tape, std::span<const ad::Var<T>> output_log_policies, const ExpertOutputPolicy& expert);

template <typename T>
struct XeLoss {
  ad::Var<T> xe;        // -sum_t log pi(y_t | y_<t)
  ad::Var<T> cloning;   // invalid when lambda == 0
  ad::Var<T> total;     // xe + lambda * cloning
  ForcedPass<T> pass;
};

/// Teacher-forced loss for one image. `targets` are word ids followed by the
/// end token; `expert` must have one entry per target when lambda > 0.
template <typename T>
XeLoss<T> xe_loss(ad::Tape<T>& tape, const CaptionModel<T>& model, const RegionFeatureSet& features, std::span<const int> targets,
                  const ExpertOutputPolicy* expert = nullptr, T lambda = T{0});

}  // namespace cavp::training
