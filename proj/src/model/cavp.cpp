// SPDX-License-Identifier: Apache-2.0
#include "cavp/model/cavp.hpp"

namespace cavp {

template <typename T>
Attended<T> attend(ad::Var<T> hidden, ad::Var<T> queries, const AttentionWeights<T>& w, std::optional<ad::Var<T>> query_projection) {
  ad::Tape<T>& tape = *hidden.tape();
  const int d = queries.shape().rows;
  ad::Var<T> proj = query_projection ? *query_projection : ad::matmul(queries, tape.param(*w.query));
  ad::Var<T> pre = ad::tanh(ad::add_row_broadcast(proj, ad::matmul(hidden, tape.param(*w.hidden))));
  ad::Var<T> logits = ad::reshape(ad::matmul(pre, tape.param(*w.score)), {1, d});
  ad::Var<T> weights = ad::softmax(logits);
  return {logits, weights, ad::matmul(weights, queries)};
}

template <typename T>
SubPolicyResult<T> sub_policy_attend(ad::Var<T> state_input, const ad::LstmState<T>& hidden, ad::Var<T> queries,
                                     const SubPolicyWeights<T>& w, std::optional<ad::Var<T>> state_projection,
                                     std::optional<ad::Var<T>> query_projection) {
  ad::Var<T> x = state_projection ? *state_projection : ad::lstm_input_projection(state_input, w.lstm);
  ad::LstmState<T> next = ad::lstm_step_projected(x, hidden, w.lstm);
  return {attend<T>(next.h, queries, w.attention, query_projection), next};
}

template <typename T>
SubPolicyResult<T> sub_policy_attend(ad::Var<T> state_input, const ad::LstmState<T>& hidden, std::span<const ad::Var<T>> queries,
                                     const SubPolicyWeights<T>& w) {
  if (queries.empty()) throw ContractError("sub_policy_attend: empty query set (seed the visual context before the first step)");
  return sub_policy_attend<T>(state_input, hidden, ad::concat_rows<T>(queries), w);
}

template <typename T>
ad::Var<T> fuse_context(ad::Var<T> context, ad::Var<T> regions, const ad::Parameter<T>& w_c) {
  const int D = regions.shape().cols;
  if (context.shape() != ad::Shape{1, D}) {
    throw ShapeError("fuse_context: context " + context.shape().str() + " does not match region width " + std::to_string(D));
  }
  if (w_c.shape() != ad::Shape{2 * D, D}) {
    throw ShapeError("fuse_context: W_c must be " + ad::Shape{2 * D, D}.str() + ", got " + w_c.shape().str());
  }
  ad::Var<T> tiled = ad::repeat_rows(context, regions.shape().rows);
  return ad::matmul(ad::concat_cols<T>({tiled, regions}), context.tape()->param(w_c));
}

#define CAVP_INSTANTIATE_CAVP(T)                                                                                    \
  template Attended<T> attend(ad::Var<T>, ad::Var<T>, const AttentionWeights<T>&, std::optional<ad::Var<T>>);      \
  template SubPolicyResult<T> sub_policy_attend(ad::Var<T>, const ad::LstmState<T>&, ad::Var<T>,                   \
                                                const SubPolicyWeights<T>&, std::optional<ad::Var<T>>,              \
                                                std::optional<ad::Var<T>>);                                         \
  template SubPolicyResult<T> sub_policy_attend(ad::Var<T>, const ad::LstmState<T>&, std::span<const ad::Var<T>>,  \
                                                const SubPolicyWeights<T>&);                                        \
  template ad::Var<T> fuse_context(ad::Var<T>, ad::Var<T>, const ad::Parameter<T>&);

CAVP_INSTANTIATE_CAVP(float)
CAVP_INSTANTIATE_CAVP(double)

#undef CAVP_INSTANTIATE_CAVP

}  // namespace cavp
