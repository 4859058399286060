// SPDX-License-Identifier: Apache-2.0
#include "cavp/autodiff/tape.hpp"

#include <algorithm>
#include <cmath>

namespace cavp::ad {

std::string_view op_name(OpKind op) {
  switch (op) {
    case OpKind::kInput: return "input";
    case OpKind::kParameter: return "parameter";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kAddRowBroadcast: return "add_row_broadcast";
    case OpKind::kRepeatRows: return "repeat_rows";
    case OpKind::kConcatCols: return "concat_cols";
    case OpKind::kConcatRows: return "concat_rows";
    case OpKind::kSliceCols: return "slice_cols";
    case OpKind::kReshape: return "reshape";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kTanh: return "tanh";
    case OpKind::kLog: return "log";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kLogSoftmax: return "log_softmax";
    case OpKind::kMeanRows: return "mean_rows";
    case OpKind::kEmbeddingRow: return "embedding_row";
    case OpKind::kSum: return "sum";
    case OpKind::kPick: return "pick";
  }
  return "unknown";
}

template <typename T>
Shape Var<T>::shape() const {
  return tape_->node(id_).shape;
}

template <typename T>
std::span<const T> Var<T>::value() const {
  return {tape_->value_ptr(id_), tape_->node(id_).shape.size()};
}

template <typename T>
std::vector<T> Var<T>::to_vector() const {
  auto v = value();
  return {v.begin(), v.end()};
}

template <typename T>
T Var<T>::item() const {
  if (!shape().is_scalar()) throw ContractError("item() on non-scalar tensor " + shape().str());
  return value()[0];
}

template <typename T>
void Tape<T>::clear() {
  nodes_.clear();
  values_.clear();
  grads_.clear();
  input_pool_.clear();
  param_nodes_.clear();
  have_grads_ = false;
}

template <typename T>
int Tape<T>::emit(OpKind op, Shape shape, std::initializer_list<int> inputs, int iaux, T saux) {
  if (shape.rows <= 0 || shape.cols <= 0) throw ShapeError(std::string(op_name(op)) + ": non-positive output shape " + shape.str());
  Node n;
  n.op = op;
  n.shape = shape;
  n.iaux = iaux;
  n.saux = saux;
  auto it = inputs.begin();
  if (it != inputs.end()) n.in0 = *it++;
  if (it != inputs.end()) n.in1 = *it++;
  if (recording_) {
    for (int in : inputs) n.requires_grad = n.requires_grad || nodes_[static_cast<std::size_t>(in)].requires_grad;
  }
  n.value_off = values_.size();
  values_.resize(values_.size() + shape.size());
  std::size_t grad_total = nodes_.empty() ? 0 : nodes_.back().grad_off + nodes_.back().shape.size();
  n.grad_off = grad_total;
  nodes_.push_back(n);
  have_grads_ = false;
  return static_cast<int>(nodes_.size() - 1);
}

template <typename T>
int Tape<T>::emit_nary(OpKind op, Shape shape, std::span<const int> inputs, int iaux) {
  const int id = emit(op, shape, {}, iaux);
  Node& n = nodes_.back();
  n.extra_begin = static_cast<int>(input_pool_.size());
  n.extra_count = static_cast<int>(inputs.size());
  input_pool_.insert(input_pool_.end(), inputs.begin(), inputs.end());
  if (recording_) {
    for (int in : inputs) n.requires_grad = n.requires_grad || nodes_[static_cast<std::size_t>(in)].requires_grad;
  }
  return id;
}

template <typename T>
std::span<const int> Tape<T>::extra_inputs(int id) const {
  const Node& n = node(id);
  return {input_pool_.data() + n.extra_begin, static_cast<std::size_t>(n.extra_count)};
}

template <typename T>
const T* Tape<T>::value_ptr(int id) const {
  const Node& n = node(id);
  return n.external ? n.external : values_.data() + n.value_off;
}

template <typename T>
T* Tape<T>::mutable_value(int id) {
  return values_.data() + node(id).value_off;
}

template <typename T>
T* Tape<T>::grad_ptr(int id) {
  return grads_.data() + node(id).grad_off;
}

template <typename T>
void Tape<T>::finish(int id) {
  if (!check_finite_) return;
  const Node& n = node(id);
  const T* v = value_ptr(id);
  for (std::size_t i = 0; i < n.shape.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw NumericalError(std::string("non-finite value produced by ") + std::string(op_name(n.op)) + " at element " +
                           std::to_string(i) + " of " + n.shape.str());
    }
  }
}

template <typename T>
Var<T> Tape<T>::input(Shape shape, std::span<const T> values, bool requires_grad) {
  if (values.size() != shape.size()) {
    throw ShapeError("input: " + std::to_string(values.size()) + " values for shape " + shape.str());
  }
  const int id = emit(OpKind::kInput, shape, {});
  nodes_.back().requires_grad = requires_grad && recording_;
  std::copy(values.begin(), values.end(), mutable_value(id));
  finish(id);
  return {this, id};
}

template <typename T>
Var<T> Tape<T>::zeros(Shape shape) {
  const int id = emit(OpKind::kInput, shape, {});
  return {this, id};
}

template <typename T>
Var<T> Tape<T>::scalar(T value) {
  return input({1, 1}, std::span<const T>(&value, 1));
}

template <typename T>
Var<T> Tape<T>::param(const Parameter<T>& p) {
  if (param_nodes_.size() <= p.index()) param_nodes_.resize(p.index() + 1, -1);
  int& slot = param_nodes_[p.index()];
  if (slot >= 0 && nodes_[static_cast<std::size_t>(slot)].external == p.values().data()) return {this, slot};
  Node n;
  n.op = OpKind::kParameter;
  n.shape = p.shape();
  n.requires_grad = recording_;
  n.external = p.values().data();
  n.param_index = p.index();
  n.value_off = values_.size();
  n.grad_off = nodes_.empty() ? 0 : nodes_.back().grad_off + nodes_.back().shape.size();
  nodes_.push_back(n);
  slot = static_cast<int>(nodes_.size() - 1);
  have_grads_ = false;
  return {this, slot};
}

template <typename T>
void Tape<T>::run_backward(int loss_id, T seed) {
  const Node& loss = node(loss_id);
  if (!loss.shape.is_scalar()) throw ContractError("backward: loss must be scalar, got shape " + loss.shape.str());
  const std::size_t total = nodes_.empty() ? 0 : nodes_.back().grad_off + nodes_.back().shape.size();
  grads_.assign(total, T{0});
  have_grads_ = true;
  if (!loss.requires_grad) return;
  grads_[loss.grad_off] = seed;
  for (int id = loss_id; id >= 0; --id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad || n.op == OpKind::kInput || n.op == OpKind::kParameter) continue;
    detail::backprop(*this, id);
  }
}

template <typename T>
void Tape<T>::backward(Var<T> loss, T seed) {
  if (loss.tape() != this) throw ContractError("backward: loss belongs to a different tape");
  if (!std::isfinite(loss.item())) throw NumericalError("backward: loss is not finite");
  run_backward(loss.id(), seed);
}

template <typename T>
GradientMap<T> Tape<T>::backward(Var<T> loss, const ParameterStore<T>& store, T seed) {
  backward(loss, seed);
  GradientMap<T> out(store);
  for (std::size_t i = 0; i < param_nodes_.size() && i < store.size(); ++i) {
    const int id = param_nodes_[i];
    if (id < 0) continue;
    const Node& n = node(id);
    if (n.external != store[i].values().data()) continue;
    const T* g = grads_.data() + n.grad_off;
    auto dst = out[i];
    std::copy(g, g + n.shape.size(), dst.begin());
  }
  if (!out.all_finite()) throw NumericalError("backward: non-finite parameter gradient");
  return out;
}

template <typename T>
std::span<const T> Tape<T>::grad(Var<T> v) const {
  if (!have_grads_) throw ContractError("grad(): no backward pass has been run on this tape");
  const Node& n = node(v.id());
  return {grads_.data() + n.grad_off, n.shape.size()};
}

template class Var<float>;
template class Var<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace cavp::ad
