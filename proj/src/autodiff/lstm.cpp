// SPDX-License-Identifier: Apache-2.0
#include "cavp/autodiff/lstm.hpp"

#include <cmath>

namespace cavp::ad {

template <typename T>
LstmWeights<T> add_lstm(ParameterStore<T>& store, const std::string& prefix, int input_size, int hidden_size) {
  store.add(prefix + ".w_in", {input_size, 4 * hidden_size});
  store.add(prefix + ".w_hid", {hidden_size, 4 * hidden_size});
  store.add(prefix + ".bias", {1, 4 * hidden_size});
  return find_lstm(store, prefix, input_size, hidden_size);
}

template <typename T>
LstmWeights<T> find_lstm(const ParameterStore<T>& store, const std::string& prefix, int input_size, int hidden_size) {
  LstmWeights<T> w;
  w.input = &store.at(prefix + ".w_in");
  w.hidden = &store.at(prefix + ".w_hid");
  w.bias = &store.at(prefix + ".bias");
  w.input_size = input_size;
  w.hidden_size = hidden_size;
  if (w.input->shape() != Shape{input_size, 4 * hidden_size} || w.hidden->shape() != Shape{hidden_size, 4 * hidden_size}) {
    throw ShapeError("lstm " + prefix + ": stored weights " + w.input->shape().str() + "/" + w.hidden->shape().str() +
                     " do not match input " + std::to_string(input_size) + ", hidden " + std::to_string(hidden_size));
  }
  return w;
}

template <typename T>
void xavier_uniform(Parameter<T>& p, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(p.shape().rows + p.shape().cols));
  std::uniform_real_distribution<double> dist(-a, a);
  for (auto& v : p.values()) v = static_cast<T>(dist(rng));
}

template <typename T>
void init_lstm(ParameterStore<T>& store, const LstmWeights<T>& w, Rng& rng) {
  auto& in = store[w.input->index()];
  auto& hid = store[w.hidden->index()];
  auto& bias = store[w.bias->index()];
  xavier_uniform(in, rng);
  xavier_uniform(hid, rng);
  auto b = bias.values();
  std::fill(b.begin(), b.end(), T{0});
  for (int j = 0; j < w.hidden_size; ++j) b[static_cast<std::size_t>(w.hidden_size + j)] = T{1};
}

template <typename T>
LstmState<T> lstm_zero_state(Tape<T>& tape, int hidden_size) {
  return {tape.zeros({1, hidden_size}), tape.zeros({1, hidden_size})};
}

template <typename T>
Var<T> lstm_input_projection(Var<T> x, const LstmWeights<T>& w) {
  if (x.shape() != Shape{1, w.input_size}) {
    throw ShapeError("lstm: input " + x.shape().str() + " does not match weights expecting " + Shape{1, w.input_size}.str());
  }
  return matmul(x, x.tape()->param(*w.input));
}

template <typename T>
LstmState<T> lstm_step_projected(Var<T> x_projected, const LstmState<T>& state, const LstmWeights<T>& w) {
  const int H = w.hidden_size;
  if (state.h.shape() != Shape{1, H} || state.c.shape() != Shape{1, H}) {
    throw ShapeError("lstm: state " + state.h.shape().str() + "/" + state.c.shape().str() + " does not match hidden " + Shape{1, H}.str());
  }
  Tape<T>& tape = *x_projected.tape();
  Var<T> gates = add(x_projected, matmul(state.h, tape.param(*w.hidden)));
  gates = add(gates, tape.param(*w.bias));
  Var<T> i = sigmoid(slice_cols(gates, 0, H));
  Var<T> f = sigmoid(slice_cols(gates, H, H));
  Var<T> o = sigmoid(slice_cols(gates, 2 * H, H));
  Var<T> u = tanh(slice_cols(gates, 3 * H, H));
  Var<T> c = add(mul(f, state.c), mul(i, u));
  Var<T> h = mul(o, tanh(c));
  return {h, c};
}

template <typename T>
LstmState<T> lstm_step(Var<T> x, const LstmState<T>& state, const LstmWeights<T>& w) {
  return lstm_step_projected(lstm_input_projection(x, w), state, w);
}

#define CAVP_INSTANTIATE_LSTM(T)                                                                      \
  template LstmWeights<T> add_lstm(ParameterStore<T>&, const std::string&, int, int);                 \
  template LstmWeights<T> find_lstm(const ParameterStore<T>&, const std::string&, int, int);          \
  template void init_lstm(ParameterStore<T>&, const LstmWeights<T>&, Rng&);                           \
  template void xavier_uniform(Parameter<T>&, Rng&);                                                  \
  template LstmState<T> lstm_zero_state(Tape<T>&, int);                                               \
  template Var<T> lstm_input_projection(Var<T>, const LstmWeights<T>&);                               \
  template LstmState<T> lstm_step_projected(Var<T>, const LstmState<T>&, const LstmWeights<T>&);      \
  template LstmState<T> lstm_step(Var<T>, const LstmState<T>&, const LstmWeights<T>&);

CAVP_INSTANTIATE_LSTM(float)
CAVP_INSTANTIATE_LSTM(double)

#undef CAVP_INSTANTIATE_LSTM

}  // namespace cavp::ad
