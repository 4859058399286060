// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cavp/autodiff/lstm.hpp"
#include "cavp/model/cavp.hpp"
#include "cavp/model/config.hpp"
#include "cavp/model/region_features.hpp"
#include "cavp/model/trajectory.hpp"

namespace cavp {

template <typename T>
struct LanguageWeights {
  ad::LstmWeights<T> lstm;               // input [h^s, v]
  const ad::Parameter<T>* out_w = nullptr;  // H x V
  const ad::Parameter<T>* out_b = nullptr;  // 1 x V
};

template <typename T>
struct LanguageStep {
  ad::Var<T> logits;     // 1 x V
  ad::Var<T> log_probs;  // 1 x V, log-softmax
  ad::LstmState<T> state;
};

/// h' = LSTM([h^s, v], h); log pi(. | y_<t) = log_softmax(h' W_y + b_y).
template <typename T>
LanguageStep<T> language_step(ad::Var<T> single_hidden, ad::Var<T> visual, const ad::LstmState<T>& state,
                              const LanguageWeights<T>& w);

template <typename T>
struct StepOutput {
  CavpStepOutput<T> visual;
  ad::Var<T> log_probs;  // 1 x V over the vocabulary
};

/// Visual policy + language policy with all trainable parameters.
template <typename T>
class CaptionModel {
 public:
  /// Registers parameters and initializes them from `seed`.
  CaptionModel(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const SharingMap& sharing() const { return sharing_; }
  ad::ParameterStore<T>& parameters() { return params_; }
  const ad::ParameterStore<T>& parameters() const { return params_; }

  /// Distinct LSTM parameter sets used by the four sub-policies.
  int lstm_parameter_sets() const { return distinct_lstm_sets(sharing_); }
  bool uses_sub_policy(SubPolicy sp) const;
  SubPolicyWeights<T> sub_policy_weights(SubPolicy sp) const;
  LanguageWeights<T> language_weights() const;
  const ad::Parameter<T>& embedding() const { return params_.at("embed"); }
  const ad::Parameter<T>& fuse_weight() const { return params_.at("fuse.w_c"); }

  Encoded<T> encode(ad::Tape<T>& tape, const RegionFeatureSet& features) const;
  DecoderState<T> initial_state(ad::Tape<T>& tape, const Encoded<T>& enc) const;

  /// s_t = [h^lang_{t-1}, mean(r), embed(prev_token)].
  ad::Var<T> state_input(ad::Tape<T>& tape, const Encoded<T>& enc, const DecoderState<T>& st) const;

  /// Runs the visual policy for one step, advances the sub-policy states and
  /// appends the output to the visual context.
  CavpStepOutput<T> cavp_step(ad::Tape<T>& tape, const Encoded<T>& enc, DecoderState<T>& st, ad::Var<T> state_input) const;

  /// Visual policy + language policy. Advances every recurrent state except
  /// `prev_token`, which the caller sets once it has chosen a word.
  StepOutput<T> step(ad::Tape<T>& tape, const Encoded<T>& enc, DecoderState<T>& st) const;

  /// Copies every parameter (by name) from a model of another precision.
  template <typename U>
  void copy_parameters_from(const CaptionModel<U>& other) {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& dst = params_[i];
      const auto& src = other.parameters().at(dst.name());
      if (src.shape() != dst.shape()) throw ShapeError("copy_parameters_from: shape mismatch for " + dst.name());
      auto d = dst.values();
      auto s = src.values();
      for (std::size_t j = 0; j < d.size(); ++j) d[j] = static_cast<T>(s[j]);
    }
  }

 private:
  void register_parameters();
  void initialize(std::uint64_t seed);

  ModelConfig config_;
  SharingMap sharing_;
  ad::ParameterStore<T> params_;
};

/// Per-step teacher-forced pass over `targets` (words followed by the end
/// token). Returns the log-probability node of each target.
template <typename T>
struct ForcedPass {
  std::vector<ad::Var<T>> target_log_probs;
  std::vector<StepOutput<T>> steps;
};

template <typename T>
ForcedPass<T> teacher_force(ad::Tape<T>& tape, const CaptionModel<T>& model, const RegionFeatureSet& features,
                            std::span<const int> targets);

/// Copies the attention distributions of a step off the tape.
template <typename T>
AttentionRecord record_attention(const CavpStepOutput<T>& out);

/// Sum of per-step log-probabilities (log of the product of conditionals).
double sequence_log_prob(const Trajectory& trajectory);

/// Replays `tokens` through the model with teacher forcing and returns the
/// per-step log-probabilities.
template <typename T>
std::vector<double> replay_log_probs(const CaptionModel<T>& model, const RegionFeatureSet& features, std::span<const int> tokens);

}  // namespace cavp
