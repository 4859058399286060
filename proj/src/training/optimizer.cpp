// SPDX-License-Identifier: Apache-2.0
#include "cavp/training/optimizer.hpp"

#include <cmath>

#include "cavp/common/errors.hpp"

namespace cavp::training {

double LrSchedule::at(int epoch) const {
  if (every <= 0) throw ContractError("learning-rate schedule: 'every' must be positive");
  return base * std::pow(decay, epoch / every);
}

double clip_gradients(ad::GradientMap<float>& grads, double max_norm) {
  const double norm = grads.l2_norm();
  if (!std::isfinite(norm)) throw NumericalError("gradient norm is not finite");
  if (max_norm > 0.0 && norm > max_norm) grads.scale(static_cast<float>(max_norm / norm));
  return norm;
}

Adam::Adam(const ad::ParameterStore<float>& store, AdamConfig config) : config_(config) {
  m_.resize(store.size());
  v_.resize(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    m_[i].assign(store[i].values().size(), 0.0f);
    v_[i].assign(store[i].values().size(), 0.0f);
  }
}

double Adam::step(ad::ParameterStore<float>& store, ad::GradientMap<float>& grads, double lr) {
  if (store.size() != m_.size()) throw ContractError("adam: parameter store does not match optimizer state");
  const double norm = clip_gradients(grads, config_.clip_norm);
  ++steps_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t p = 0; p < store.size(); ++p) {
    auto w = store[p].values();
    auto g = grads[p];
    auto& m = m_[p];
    auto& v = v_[p];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i];
      const double mi = b1 * m[i] + (1.0 - b1) * gi;
      const double vi = b2 * v[i] + (1.0 - b2) * gi * gi;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      w[i] = static_cast<float>(w[i] - lr * (mi / c1) / (std::sqrt(vi / c2) + config_.eps));
    }
  }
  return norm;
}

}  // namespace cavp::training
