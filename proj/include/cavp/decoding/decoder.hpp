// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "cavp/common/random.hpp"
#include "cavp/model/model.hpp"
#include "cavp/model/trajectory.hpp"

namespace cavp::decoding {

/// Decoding stops after the end token or once `max_length` words have been
/// emitted (the trajectory is then unfinished). Attention copies are kept
/// only when `record_attention` is set.
struct DecodeOptions {
  int max_length = -1;  // < 0: model config
  bool record_attention = true;
};

/// Argmax per step, ties to the lowest vocabulary index.
template <typename T>
Trajectory greedy_decode(const CaptionModel<T>& model, const RegionFeatureSet& features, const DecodeOptions& options = {});

/// One categorical draw per step.
template <typename T>
Trajectory sample_decode(const CaptionModel<T>& model, const RegionFeatureSet& features, Rng& rng, const DecodeOptions& options = {});

/// A sampled trajectory together with the log-probability nodes of the chosen
/// tokens on `tape`, so a loss can be built without a second forward pass.
template <typename T>
struct TapedTrajectory {
  Trajectory trajectory;
  std::vector<ad::Var<T>> log_probs;
};

template <typename T>
TapedTrajectory<T> sample_decode_on_tape(ad::Tape<T>& tape, const CaptionModel<T>& model, const RegionFeatureSet& features, Rng& rng,
                                         const DecodeOptions& options = {});

/// Length-synchronous beam over summed log-probabilities without length
/// normalization. Finished hypotheses stay in the pool and compete by total.
/// Throws ContractError when `beam_width` < 1.
template <typename T>
Trajectory beam_decode(const CaptionModel<T>& model, const RegionFeatureSet& features, int beam_width, const DecodeOptions& options = {});

}  // namespace cavp::decoding
