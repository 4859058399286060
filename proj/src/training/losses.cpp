// SPDX-License-Identifier: Apache-2.0
#include "cavp/training/losses.hpp"

#include <cmath>
#include <limits>

#include "cavp/common/errors.hpp"

namespace cavp::training {

double kl_divergence(const std::array<double, 2>& p, const std::array<double, 2>& q) {
  double kl = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] <= 0.0) return std::numeric_limits<double>::infinity();
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

template <typename T>
ad::Var<T> cloning_loss(ad::Tape<T>& tape, std::span<const ad::Var<T>> output_log_policies, const ExpertOutputPolicy& expert) {
  if (output_log_policies.size() != expert.size()) {
    throw ContractError("cloning_loss: " + std::to_string(output_log_policies.size()) + " steps but " + std::to_string(expert.size()) +
                        " expert targets");
  }
  if (expert.size() == 0) return tape.scalar(T{0});
  expert.validate();
  // KL(p || q) = sum p log p - sum p log q; the first term is a constant.
  T entropy_term = 0;
  std::vector<ad::Var<T>> cross;
  cross.reserve(expert.size());
  for (std::size_t t = 0; t < expert.size(); ++t) {
    const auto& p = expert.targets[t];
    if (!output_log_policies[t].valid()) throw ContractError("cloning_loss: variant has no output sub-policy");
    for (double pi : p)
      if (pi > 0.0) entropy_term += static_cast<T>(pi * std::log(pi));
    const T pv[2] = {static_cast<T>(p[0]), static_cast<T>(p[1])};
    ad::Var<T> pt = tape.input({1, 2}, pv);
    cross.push_back(ad::mul(pt, output_log_policies[t]));
  }
  ad::Var<T> neg_cross = ad::scale(ad::sum(ad::concat_cols<T>(cross)), T{-1});
  ad::Var<T> kl_sum = ad::add(neg_cross, tape.scalar(entropy_term));
  return ad::scale(kl_sum, T{1} / static_cast<T>(expert.size()));
}

template <typename T>
XeLoss<T> xe_loss(ad::Tape<T>& tape, const CaptionModel<T>& model, const RegionFeatureSet& features, std::span<const int> targets,
                  const ExpertOutputPolicy* expert, T lambda) {
  if (targets.empty()) throw ContractError("xe_loss: empty target sequence");
  if (lambda < T{0}) throw ContractError("xe_loss: cloning weight must be >= 0");
  XeLoss<T> out;
  out.pass = teacher_force(tape, model, features, targets);
  ad::Var<T> lp = ad::sum(ad::concat_cols<T>(out.pass.target_log_probs));
  out.xe = ad::scale(lp, T{-1});
  out.total = out.xe;
  if (lambda > T{0}) {
    if (expert == nullptr) throw ContractError("xe_loss: cloning weight > 0 needs an expert policy");
    std::vector<ad::Var<T>> policies;
    policies.reserve(out.pass.steps.size());
    for (const auto& s : out.pass.steps) policies.push_back(s.visual.output_log_policy);
    out.cloning = cloning_loss<T>(tape, policies, *expert);
    out.total = ad::add(out.xe, ad::scale(out.cloning, lambda));
  }
  return out;
}

template ad::Var<float> cloning_loss(ad::Tape<float>&, std::span<const ad::Var<float>>, const ExpertOutputPolicy&);
template ad::Var<double> cloning_loss(ad::Tape<double>&, std::span<const ad::Var<double>>, const ExpertOutputPolicy&);
template XeLoss<float> xe_loss(ad::Tape<float>&, const CaptionModel<float>&, const RegionFeatureSet&, std::span<const int>,
                               const ExpertOutputPolicy*, float);
template XeLoss<double> xe_loss(ad::Tape<double>&, const CaptionModel<double>&, const RegionFeatureSet&, std::span<const int>,
                                const ExpertOutputPolicy*, double);

}  // namespace cavp::training
