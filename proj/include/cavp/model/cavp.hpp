// SPDX-License-Identifier: Apache-2.0
//
// Context-aware visual policy: four attention sub-policies (single, context,
// composition, output) that read the same per-step state
//
//   s_t = [h^lang_{t-1}, mean(r), embed(y_{t-1})]
//
// and each keep their own LSTM hidden state, while the LSTM weights follow
// the variant's sharing map.
#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "cavp/autodiff/lstm.hpp"
#include "cavp/model/config.hpp"

namespace cavp {

template <typename T>
struct AttentionWeights {
  const ad::Parameter<T>* hidden = nullptr;  // H x A
  const ad::Parameter<T>* query = nullptr;   // D x A
  const ad::Parameter<T>* score = nullptr;   // A x 1
};

template <typename T>
struct SubPolicyWeights {
  ad::LstmWeights<T> lstm;
  AttentionWeights<T> attention;
};

template <typename T>
struct Attended {
  ad::Var<T> logits;   // 1 x d
  ad::Var<T> weights;  // 1 x d, softmax(logits)
  ad::Var<T> fused;    // 1 x D, weights . queries
};

/// Additive attention over the rows of `queries` (d x D):
///   weights = softmax_i(w_score^T tanh(W_hid^T h + W_q^T q_i)),  fused = sum_i weights_i q_i.
/// `query_projection` (d x A) may be passed when queries . W_q is already on the tape.
template <typename T>
Attended<T> attend(ad::Var<T> hidden, ad::Var<T> queries, const AttentionWeights<T>& w,
                   std::optional<ad::Var<T>> query_projection = std::nullopt);

template <typename T>
struct SubPolicyResult {
  Attended<T> attention;
  ad::LstmState<T> state;  // updated hidden/cell
};

/// One sub-policy step: advance the LSTM on the shared state, then attend
/// from the updated hidden state. Throws ContractError on an empty query set.
template <typename T>
SubPolicyResult<T> sub_policy_attend(ad::Var<T> state_input, const ad::LstmState<T>& hidden, ad::Var<T> queries,
                                     const SubPolicyWeights<T>& w, std::optional<ad::Var<T>> state_projection = std::nullopt,
                                     std::optional<ad::Var<T>> query_projection = std::nullopt);

/// Same, with the query set given as separate 1 x D rows.
template <typename T>
SubPolicyResult<T> sub_policy_attend(ad::Var<T> state_input, const ad::LstmState<T>& hidden,
                                     std::span<const ad::Var<T>> queries, const SubPolicyWeights<T>& w);

/// c_i = [context ; r_i] W_c for every region row; W_c is 2D x D.
template <typename T>
ad::Var<T> fuse_context(ad::Var<T> context, ad::Var<T> regions, const ad::Parameter<T>& w_c);

/// Regions and their mean pool placed on a tape, with the single
/// sub-policy's query projection cached (regions do not change over time).
template <typename T>
struct Encoded {
  ad::Var<T> regions;  // k x D
  ad::Var<T> mean;     // 1 x D
  ad::Var<T> single_query_projection;
};

/// Per-image recurrent state. Copying it is cheap (tape handles), which is
/// what beam search relies on to give every hypothesis its own context.
template <typename T>
struct DecoderState {
  std::array<ad::LstmState<T>, kSubPolicyCount> sub_policy;
  ad::LstmState<T> language;
  /// Previous CAVP outputs. Holds only the mean-pool seed until the first
  /// output is appended, which replaces it.
  std::vector<ad::Var<T>> context;
  bool context_is_seed = true;
  int prev_token = 1;
  int steps = 0;
};

template <typename T>
struct CavpStepOutput {
  ad::Var<T> single_feature;       // v^s
  ad::Var<T> composition_feature;  // v^p (invalid for Single)
  ad::Var<T> output;               // v
  ad::Var<T> single_hidden;        // h^s
  ad::Var<T> context_feature;      // f^c (invalid for Single)
  ad::Var<T> att_single;           // 1 x k
  ad::Var<T> att_context;          // 1 x |context| (cavp4c only)
  ad::Var<T> att_composition;      // 1 x k
  ad::Var<T> att_output;           // 1 x 2 (single, composition)
  ad::Var<T> output_log_policy;    // log of att_output via log-softmax
};

}  // namespace cavp
