// SPDX-License-Identifier: Apache-2.0
#include "cavp/training/scst.hpp"

#include <spdlog/spdlog.h>

#include "cavp/common/errors.hpp"
#include "cavp/decoding/decoder.hpp"

namespace cavp::training {

template <typename T>
ad::GradientMap<T> policy_gradient(const CaptionModel<T>& model, const RegionFeatureSet& features, std::span<const int> tokens, double advantage) {
  ad::GradientMap<T> grads(model.parameters());
  if (advantage == 0.0 || tokens.empty()) return grads;
  ad::Tape<T> tape;
  auto pass = teacher_force(tape, model, features, tokens);
  ad::Var<T> lp = ad::sum(ad::concat_cols<T>(pass.target_log_probs));
  return tape.backward(ad::scale(lp, static_cast<T>(-advantage)), model.parameters());
}

template <typename T>
ScstStep<T> scst_step(const CaptionModel<T>& model, const RegionFeatureSet& features, std::span<const metrics::TokenSequence> references,
                      const ScstContext& context, Rng& rng) {
  if (context.vocab == nullptr) throw ContractError("scst_step: vocabulary missing");
  ScstStep<T> out{ad::GradientMap<T>(model.parameters()), {}};
  auto& diag = out.diagnostics;

  decoding::DecodeOptions opts;
  opts.record_attention = false;
  ad::Tape<T> tape;
  decoding::TapedTrajectory<T> sample = decoding::sample_decode_on_tape(tape, model, features, rng, opts);
  diag.sample_tokens = sample.trajectory.tokens();
  diag.sample_log_prob = sample.trajectory.total_log_prob;
  const metrics::TokenSequence sample_words = context.vocab->decode(sample.trajectory.words());
  if (sample_words.empty()) {
    spdlog::warn("scst: empty sampled caption, skipping image");
    diag.skipped = true;
    return out;
  }

  const Trajectory greedy = decoding::greedy_decode(model, features, opts);
  diag.sample_reward = metrics::reward(sample_words, references, context.reward, context.index);
  diag.greedy_reward = metrics::reward(context.vocab->decode(greedy.words()), references, context.reward, context.index);
  diag.advantage = diag.sample_reward - diag.greedy_reward;
  if (diag.advantage == 0.0) return out;

  ad::Var<T> lp = ad::sum(ad::concat_cols<T>(sample.log_probs));
  out.gradients = tape.backward(ad::scale(lp, static_cast<T>(-diag.advantage)), model.parameters());
  return out;
}

template ScstStep<float> scst_step(const CaptionModel<float>&, const RegionFeatureSet&, std::span<const metrics::TokenSequence>,
                                   const ScstContext&, Rng&);
template ScstStep<double> scst_step(const CaptionModel<double>&, const RegionFeatureSet&, std::span<const metrics::TokenSequence>,
                                    const ScstContext&, Rng&);
template ad::GradientMap<float> policy_gradient(const CaptionModel<float>&, const RegionFeatureSet&, std::span<const int>, double);
template ad::GradientMap<double> policy_gradient(const CaptionModel<double>&, const RegionFeatureSet&, std::span<const int>, double);

}  // namespace cavp::training
