// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "cavp/autodiff/tensor.hpp"

namespace cavp::training {

/// lr(epoch) = base * decay^floor(epoch / every).
struct LrSchedule {
  double base = 5e-4;
  double decay = 0.8;
  int every = 3;

  double at(int epoch) const;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Global gradient-norm clip; <= 0 disables clipping.
  double clip_norm = 5.0;
};

/// Scales `grads` in place so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
double clip_gradients(ad::GradientMap<float>& grads, double max_norm);

class Adam {
 public:
  Adam(const ad::ParameterStore<float>& store, AdamConfig config = {});

  /// Clips, then applies one bias-corrected update. Returns the pre-clip
  /// gradient norm.
  double step(ad::ParameterStore<float>& store, ad::GradientMap<float>& grads, double lr);

  const AdamConfig& config() const { return config_; }
  std::uint64_t steps() const { return steps_; }
  std::vector<std::vector<float>>& first_moments() { return m_; }
  std::vector<std::vector<float>>& second_moments() { return v_; }
  const std::vector<std::vector<float>>& first_moments() const { return m_; }
  const std::vector<std::vector<float>>& second_moments() const { return v_; }
  void set_steps(std::uint64_t steps) { steps_ = steps; }

 private:
  AdamConfig config_;
  std::uint64_t steps_ = 0;
  std::vector<std::vector<float>> m_;
  std::vector<std::vector<float>> v_;
};

}  // namespace cavp::training
