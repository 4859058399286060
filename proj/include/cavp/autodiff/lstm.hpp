// SPDX-License-Identifier: Apache-2.0
//
// Vanilla LSTM cell built from tape primitives.
//
//   g = x W_in + h W_hid + b          (1 x 4H, gate blocks i | f | o | u)
//   c' = sigmoid(f) * c + sigmoid(i) * tanh(u)
//   h' = sigmoid(o) * tanh(c')
#pragma once

#include <string>

#include "cavp/autodiff/ops.hpp"
#include "cavp/common/random.hpp"

namespace cavp::ad {

template <typename T>
struct LstmWeights {
  const Parameter<T>* input = nullptr;   // in x 4H
  const Parameter<T>* hidden = nullptr;  // H x 4H
  const Parameter<T>* bias = nullptr;    // 1 x 4H
  int input_size = 0;
  int hidden_size = 0;
};

template <typename T>
struct LstmState {
  Var<T> h;
  Var<T> c;
};

/// Registers `<prefix>.w_in`, `<prefix>.w_hid`, `<prefix>.bias`.
template <typename T>
LstmWeights<T> add_lstm(ParameterStore<T>& store, const std::string& prefix, int input_size, int hidden_size);

/// Looks up weights previously registered with add_lstm.
template <typename T>
LstmWeights<T> find_lstm(const ParameterStore<T>& store, const std::string& prefix, int input_size, int hidden_size);

/// Xavier-uniform weights, zero bias, forget-gate bias 1.0.
template <typename T>
void init_lstm(ParameterStore<T>& store, const LstmWeights<T>& w, Rng& rng);

/// Uniform in [-a, a], a = sqrt(6 / (rows + cols)).
template <typename T>
void xavier_uniform(Parameter<T>& p, Rng& rng);

template <typename T>
LstmState<T> lstm_zero_state(Tape<T>& tape, int hidden_size);

/// x W_in; split out so callers that feed the same input into several cells
/// sharing weights can project once.
template <typename T>
Var<T> lstm_input_projection(Var<T> x, const LstmWeights<T>& w);

template <typename T>
LstmState<T> lstm_step_projected(Var<T> x_projected, const LstmState<T>& state, const LstmWeights<T>& w);

template <typename T>
LstmState<T> lstm_step(Var<T> x, const LstmState<T>& state, const LstmWeights<T>& w);

}  // namespace cavp::ad
