// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode differentiation tape. Every primitive appends one node; the
// node ids are a valid topological order by construction, so backward is a
// single reverse sweep.
#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cavp/autodiff/tensor.hpp"

namespace cavp::ad {

enum class OpKind : std::uint8_t {
  kInput,
  kParameter,
  kMatMul,
  kAdd,
  kSub,
  kMul,
  kScale,
  kAddRowBroadcast,
  kRepeatRows,
  kConcatCols,
  kConcatRows,
  kSliceCols,
  kReshape,
  kSigmoid,
  kTanh,
  kLog,
  kSoftmax,
  kLogSoftmax,
  kMeanRows,
  kEmbeddingRow,
  kSum,
  kPick,
};

std::string_view op_name(OpKind op);

template <typename T>
class Tape;

/// Handle to a tensor recorded on a tape. Cheap to copy; only valid while the
/// tape is alive and not cleared. Spans returned by value() are invalidated
/// by the next operation recorded on the same tape.
template <typename T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, int id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr; }
  int id() const { return id_; }
  Tape<T>* tape() const { return tape_; }
  Shape shape() const;
  std::span<const T> value() const;
  std::vector<T> to_vector() const;
  T item() const;

 private:
  Tape<T>* tape_ = nullptr;
  int id_ = -1;
};

template <typename T>
class Tape {
 public:
  struct Node {
    OpKind op = OpKind::kInput;
    Shape shape;
    bool requires_grad = false;
    int in0 = -1;
    int in1 = -1;
    int extra_begin = 0;  // into input_pool_, for n-ary ops
    int extra_count = 0;
    int iaux = 0;
    T saux{};
    std::size_t value_off = 0;
    std::size_t grad_off = 0;
    const T* external = nullptr;  // parameter storage, not owned
    std::size_t param_index = 0;
  };

  explicit Tape(bool recording = true) : recording_(recording) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Drops all nodes but keeps allocated capacity.
  void clear();

  bool recording() const { return recording_; }
  void set_recording(bool on) { recording_ = on; }

  /// When on (the default) every op output is checked for NaN/Inf.
  void set_check_finite(bool on) { check_finite_ = on; }

  /// Negative-control hook for gradient checking: the backward rule of `op`
  /// adds a deliberate error to its input gradients.
  void inject_fault(std::optional<OpKind> op) { fault_ = op; }
  std::optional<OpKind> fault() const { return fault_; }

  Var<T> input(Shape shape, std::span<const T> values, bool requires_grad = false);
  Var<T> zeros(Shape shape);
  Var<T> scalar(T value);

  /// Binds a parameter. Repeated binds of the same parameter return the same
  /// node so its gradient accumulates in one place.
  Var<T> param(const Parameter<T>& p);

  /// Reverse sweep from a 1x1 loss. Returns gradients for every parameter
  /// bound on this tape, scaled by `seed`; unbound parameters get zeros.
  GradientMap<T> backward(Var<T> loss, const ParameterStore<T>& store, T seed = T{1});

  /// Reverse sweep without collecting parameter gradients (inputs only).
  void backward(Var<T> loss, T seed = T{1});

  /// Gradient of any node after the most recent backward().
  std::span<const T> grad(Var<T> v) const;

  std::size_t size() const { return nodes_.size(); }

  // --- primitive plumbing (used by ops.cpp) ---
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  std::span<const int> extra_inputs(int id) const;
  int emit(OpKind op, Shape shape, std::initializer_list<int> inputs, int iaux = 0, T saux = T{0});
  int emit_nary(OpKind op, Shape shape, std::span<const int> inputs, int iaux = 0);
  const T* value_ptr(int id) const;
  T* mutable_value(int id);
  T* grad_ptr(int id);
  void finish(int id);  // finite check after forward
  bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }

 private:
  void run_backward(int loss_id, T seed);

  std::vector<Node> nodes_;
  std::vector<T> values_;
  std::vector<T> grads_;
  std::vector<int> input_pool_;
  std::vector<int> param_nodes_;  // parameter index -> node id or -1
  bool recording_ = true;
  bool check_finite_ = true;
  bool have_grads_ = false;
  std::optional<OpKind> fault_;
};

namespace detail {
/// Propagates node `id`'s gradient into its inputs (defined next to the
/// forward rules in ops.cpp).
template <typename T>
void backprop(Tape<T>& tape, int id);
}  // namespace detail

}  // namespace cavp::ad
