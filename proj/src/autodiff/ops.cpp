// SPDX-License-Identifier: Apache-2.0
#include "cavp/autodiff/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

namespace cavp::ad {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapC = Eigen::Map<const RowMat<T>>;
template <typename T>
using Map = Eigen::Map<RowMat<T>>;

template <typename T>
Tape<T>& same_tape(Var<T> a, Var<T> b, const char* op) {
  if (!a.valid() || !b.valid()) throw ContractError(std::string(op) + ": invalid tensor handle");
  if (a.tape() != b.tape()) throw ContractError(std::string(op) + ": operands live on different tapes");
  return *a.tape();
}

template <typename T>
Tape<T>& tape_of(Var<T> a, const char* op) {
  if (!a.valid()) throw ContractError(std::string(op) + ": invalid tensor handle");
  return *a.tape();
}

[[noreturn]] void shape_mismatch(const char* op, Shape a, Shape b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + a.str() + " and " + b.str());
}

template <typename T>
T sigmoid_scalar(T x) {
  // Split on sign so exp never overflows.
  if (x >= T{0}) {
    const T z = std::exp(-x);
    return T{1} / (T{1} + z);
  }
  const T z = std::exp(x);
  return z / (T{1} + z);
}

template <typename T>
Var<T> elementwise_binary(OpKind op, Var<T> a, Var<T> b, const char* name) {
  Tape<T>& t = same_tape(a, b, name);
  if (a.shape() != b.shape()) shape_mismatch(name, a.shape(), b.shape());
  const int id = t.emit(op, a.shape(), {a.id(), b.id()});
  const T* x = t.value_ptr(a.id());
  const T* y = t.value_ptr(b.id());
  T* out = t.mutable_value(id);
  const std::size_t n = a.shape().size();
  switch (op) {
    case OpKind::kAdd:
      for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + y[i];
      break;
    case OpKind::kSub:
      for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - y[i];
      break;
    default:
      for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
      break;
  }
  t.finish(id);
  return {&t, id};
}

template <typename T>
Var<T> elementwise_unary(OpKind op, Var<T> a, const char* name) {
  Tape<T>& t = tape_of(a, name);
  const int id = t.emit(op, a.shape(), {a.id()});
  const T* x = t.value_ptr(a.id());
  T* out = t.mutable_value(id);
  const std::size_t n = a.shape().size();
  switch (op) {
    case OpKind::kSigmoid:
      for (std::size_t i = 0; i < n; ++i) out[i] = sigmoid_scalar(x[i]);
      break;
    case OpKind::kTanh:
      for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(x[i]);
      break;
    case OpKind::kLog:
      for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > T{0})) throw NumericalError("log: non-positive input " + std::to_string(x[i]) + " at element " + std::to_string(i));
        out[i] = std::log(x[i]);
      }
      break;
    default:
      break;
  }
  t.finish(id);
  return {&t, id};
}

}  // namespace

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  Tape<T>& t = same_tape(a, b, "matmul");
  const Shape sa = a.shape(), sb = b.shape();
  if (sa.cols != sb.rows) shape_mismatch("matmul", sa, sb);
  const int id = t.emit(OpKind::kMatMul, {sa.rows, sb.cols}, {a.id(), b.id()});
  Map<T> out(t.mutable_value(id), sa.rows, sb.cols);
  out.noalias() = MapC<T>(t.value_ptr(a.id()), sa.rows, sa.cols) * MapC<T>(t.value_ptr(b.id()), sb.rows, sb.cols);
  t.finish(id);
  return {&t, id};
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  return elementwise_binary(OpKind::kAdd, a, b, "add");
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  return elementwise_binary(OpKind::kSub, a, b, "sub");
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  return elementwise_binary(OpKind::kMul, a, b, "mul");
}

template <typename T>
Var<T> scale(Var<T> a, T factor) {
  Tape<T>& t = tape_of(a, "scale");
  const int id = t.emit(OpKind::kScale, a.shape(), {a.id()}, 0, factor);
  const T* x = t.value_ptr(a.id());
  T* out = t.mutable_value(id);
  for (std::size_t i = 0; i < a.shape().size(); ++i) out[i] = factor * x[i];
  t.finish(id);
  return {&t, id};
}

template <typename T>
Var<T> add_row_broadcast(Var<T> m, Var<T> row) {
  Tape<T>& t = same_tape(m, row, "add_row_broadcast");
  const Shape sm = m.shape(), sr = row.shape();
  if (sr.rows != 1 || sr.cols != sm.cols) shape_mismatch("add_row_broadcast", sm, sr);
  const int id = t.emit(OpKind::kAddRowBroadcast, sm, {m.id(), row.id()});
  const T* x = t.value_ptr(m.id());
  const T* r = t.value_ptr(row.id());
  T* out = t.mutable_value(id);
  for (int i = 0; i < sm.rows; ++i)
    for (int j = 0; j < sm.cols; ++j) out[i * sm.cols + j] = x[i * sm.cols + j] + r[j];
  t.finish(id);
  return {&t, id};
}

template <typename T>
Var<T> repeat_rows(Var<T> row, int k) {
  Tape<T>& t = tape_of(row, "repeat_rows");
  const Shape s = row.shape();
  if (s.rows != 1) throw ShapeError("repeat_rows: expected a row vector, got " + s.str());
  if (k <= 0) throw ShapeError("repeat_rows: repeat count must be positive, got " + std::to_string(k));
  const int id = t.emit(OpKind::kRepeatRows, {k, s.cols}, {row.id()}, k);
  const T* r = t.value_ptr(row.id());
  T* out = t.mutable_value(id);
  for (int i = 0; i < k; ++i) std::copy(r, r + s.cols, out + static_cast<std::size_t>(i) * s.cols);
  t.finish(id);
  return {&t, id};
}

template <typename T>
Var<T> concat_cols(std::span<const Var<T>> parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  Tape<T>& t = tape_of(parts[0], "concat_cols");
  const int rows = parts[0].shape().rows;
  int cols = 0;
  std::vector<int> ids;
  ids.reserve(parts.size());
  for (const auto& p : parts) {
    same_tape(parts[0], p, "concat_cols");
    if (p.shape().rows != rows) shape_mismatch("concat_cols", parts[0].shape(), p.shape());
    cols += p.shape().cols;
    ids.push_back(p.id());
  }
  const int id = t.emit_nary(OpKind::kConcatCols, {rows, cols}, ids);
  T* out = t.mutable_value(id);
  int offset = 0;
  for (const auto& p : parts) {
    const int pc = p.shape().cols;
    const T* src = t.value_ptr(p.id());
    for (int i = 0; i < rows; ++i) std::copy(src + i * pc, src + (i + 1) * pc, out + i * cols + offset);
    offset += pc;
  }
  t.finish(id);
  return {&t, id};
}

template <typename T>
Var<T> concat_rows(std::span<const Var<T>> parts) {
  if (parts.empty()) throw ContractError("concat_rows: no inputs");
  Tape<T>& t = tape_of(parts[0], "concat_rows");
  const int cols = parts[0].shape().cols;
  int rows = 0;
  std::vector<int> ids;
  ids.reserve(parts.size());
  for (const auto& p : parts) {
    same_tape(parts[0], p, "concat_rows");
    if (p.shape().cols != cols) shape_mismatch("concat_rows", parts[0].shape(), p.shape());
    rows += p.shape().rows;
    ids.push_back(p.id());
  }
  const int id = t.emit_nary(OpKind::kConcatRows, {rows, cols}, ids);
  T* out = t.mutable_value(id);
  for (const auto& p : parts) {
    const T* src = t.value_ptr(p.id());
    out = std::copy(src, src + p.shape().size(), out);
  }
  t.finish(id);
  return {&t, id};
}

template <typename T>
Var<T> slice_cols(Var<T> a, int start, int count) {
  Tape<T>& t = tape_of(a, "slice_cols");
  const Shape s = a.shape();
  if (start < 0 || count <= 0 || start + count > s.cols) {
    throw ShapeError("slice_cols: columns [" + std::to_string(start) + ", " + std::to_string(start + count) + ") out of range for " + s.str());
  }
  const int id = t.emit(OpKind::kSliceCols, {s.rows, count}, {a.id()}, start);
  const T* x = t.value_ptr(a.id());
  T* out = t.mutable_value(id);
  for (int i = 0; i < s.rows; ++i) std::copy(x + i * s.cols + start, x + i * s.cols + start + count, out + i * count);
  t.finish(id);
  return {&t, id};
}

template <typename T>
Var<T> reshape(Var<T> a, Shape shape) {
  Tape<T>& t = tape_of(a, "reshape");
  if (shape.size() != a.shape().size()) shape_mismatch("reshape", a.shape(), shape);
  const int id = t.emit(OpKind::kReshape, shape, {a.id()});
  const T* x = t.value_ptr(a.id());
  std::copy(x, x + shape.size(), t.mutable_value(id));
  return {&t, id};
}

template <typename T>
Var<T> sigmoid(Var<T> a) {
  return elementwise_unary(OpKind::kSigmoid, a, "sigmoid");
}

template <typename T>
Var<T> tanh(Var<T> a) {
  return elementwise_unary(OpKind::kTanh, a, "tanh");
}

template <typename T>
Var<T> log(Var<T> a) {
  return elementwise_unary(OpKind::kLog, a, "log");
}

template <typename T>
Var<T> softmax(Var<T> a) {
  Tape<T>& t = tape_of(a, "softmax");
  const int id = t.emit(OpKind::kSoftmax, a.shape(), {a.id()});
  const T* x = t.value_ptr(a.id());
  T* out = t.mutable_value(id);
  const std::size_t n = a.shape().size();
  const T mx = *std::max_element(x, x + n);
  T total{0};
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(x[i] - mx);
    total += out[i];
  }
  for (std::size_t i = 0; i < n; ++i) out[i] /= total;
  t.finish(id);
  return {&t, id};
}

template <typename T>
Var<T> log_softmax(Var<T> a) {
  Tape<T>& t = tape_of(a, "log_softmax");
  const int id = t.emit(OpKind::kLogSoftmax, a.shape(), {a.id()});
  const T* x = t.value_ptr(a.id());
  T* out = t.mutable_value(id);
  const std::size_t n = a.shape().size();
  const T mx = *std::max_element(x, x + n);
  T total{0};
  for (std::size_t i = 0; i < n; ++i) total += std::exp(x[i] - mx);
  const T lse = mx + std::log(total);
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - lse;
  t.finish(id);
  return {&t, id};
}

template <typename T>
Var<T> mean_rows(Var<T> a) {
  Tape<T>& t = tape_of(a, "mean_rows");
  const Shape s = a.shape();
  const int id = t.emit(OpKind::kMeanRows, {1, s.cols}, {a.id()});
  const T* x = t.value_ptr(a.id());
  T* out = t.mutable_value(id);
  for (int j = 0; j < s.cols; ++j) {
    T acc{0};
    for (int i = 0; i < s.rows; ++i) acc += x[i * s.cols + j];
    out[j] = acc / static_cast<T>(s.rows);
  }
  t.finish(id);
  return {&t, id};
}

template <typename T>
Var<T> embedding_row(Var<T> table, int index) {
  Tape<T>& t = tape_of(table, "embedding_row");
  const Shape s = table.shape();
  if (index < 0 || index >= s.rows) {
    throw ShapeError("embedding_row: index " + std::to_string(index) + " out of range for table " + s.str());
  }
  const int id = t.emit(OpKind::kEmbeddingRow, {1, s.cols}, {table.id()}, index);
  const T* x = t.value_ptr(table.id()) + static_cast<std::size_t>(index) * s.cols;
  std::copy(x, x + s.cols, t.mutable_value(id));
  return {&t, id};
}

template <typename T>
Var<T> sum(Var<T> a) {
  Tape<T>& t = tape_of(a, "sum");
  const int id = t.emit(OpKind::kSum, {1, 1}, {a.id()});
  const T* x = t.value_ptr(a.id());
  T acc{0};
  for (std::size_t i = 0; i < a.shape().size(); ++i) acc += x[i];
  *t.mutable_value(id) = acc;
  t.finish(id);
  return {&t, id};
}

template <typename T>
Var<T> pick(Var<T> a, int index) {
  Tape<T>& t = tape_of(a, "pick");
  if (index < 0 || static_cast<std::size_t>(index) >= a.shape().size()) {
    throw ShapeError("pick: index " + std::to_string(index) + " out of range for " + a.shape().str());
  }
  const int id = t.emit(OpKind::kPick, {1, 1}, {a.id()}, index);
  *t.mutable_value(id) = t.value_ptr(a.id())[index];
  return {&t, id};
}

namespace detail {

template <typename T>
void backprop(Tape<T>& t, int id) {
  const auto& n = t.node(id);
  const T* gy = t.grad_ptr(id);
  const T* y = t.value_ptr(id);
  const std::size_t size = n.shape.size();
  auto wants = [&](int in) { return in >= 0 && t.needs_grad(in); };

  switch (n.op) {
    case OpKind::kInput:
    case OpKind::kParameter:
      break;
    case OpKind::kMatMul: {
      const Shape sa = t.node(n.in0).shape, sb = t.node(n.in1).shape;
      MapC<T> dC(gy, n.shape.rows, n.shape.cols);
      if (wants(n.in0)) {
        Map<T>(t.grad_ptr(n.in0), sa.rows, sa.cols).noalias() += dC * MapC<T>(t.value_ptr(n.in1), sb.rows, sb.cols).transpose();
      }
      if (wants(n.in1)) {
        Map<T>(t.grad_ptr(n.in1), sb.rows, sb.cols).noalias() += MapC<T>(t.value_ptr(n.in0), sa.rows, sa.cols).transpose() * dC;
      }
      break;
    }
    case OpKind::kAdd:
    case OpKind::kSub: {
      const T sign = n.op == OpKind::kSub ? T{-1} : T{1};
      if (wants(n.in0)) {
        T* g = t.grad_ptr(n.in0);
        for (std::size_t i = 0; i < size; ++i) g[i] += gy[i];
      }
      if (wants(n.in1)) {
        T* g = t.grad_ptr(n.in1);
        for (std::size_t i = 0; i < size; ++i) g[i] += sign * gy[i];
      }
      break;
    }
    case OpKind::kMul: {
      const T* a = t.value_ptr(n.in0);
      const T* b = t.value_ptr(n.in1);
      if (wants(n.in0)) {
        T* g = t.grad_ptr(n.in0);
        for (std::size_t i = 0; i < size; ++i) g[i] += gy[i] * b[i];
      }
      if (wants(n.in1)) {
        T* g = t.grad_ptr(n.in1);
        for (std::size_t i = 0; i < size; ++i) g[i] += gy[i] * a[i];
      }
      break;
    }
    case OpKind::kScale: {
      T* g = t.grad_ptr(n.in0);
      for (std::size_t i = 0; i < size; ++i) g[i] += n.saux * gy[i];
      break;
    }
    case OpKind::kAddRowBroadcast: {
      const int rows = n.shape.rows, cols = n.shape.cols;
      if (wants(n.in0)) {
        T* g = t.grad_ptr(n.in0);
        for (std::size_t i = 0; i < size; ++i) g[i] += gy[i];
      }
      if (wants(n.in1)) {
        T* g = t.grad_ptr(n.in1);
        for (int i = 0; i < rows; ++i)
          for (int j = 0; j < cols; ++j) g[j] += gy[i * cols + j];
      }
      break;
    }
    case OpKind::kRepeatRows: {
      const int cols = n.shape.cols;
      T* g = t.grad_ptr(n.in0);
      for (int i = 0; i < n.shape.rows; ++i)
        for (int j = 0; j < cols; ++j) g[j] += gy[i * cols + j];
      break;
    }
    case OpKind::kConcatCols: {
      const int rows = n.shape.rows, cols = n.shape.cols;
      int offset = 0;
      for (int in : t.extra_inputs(id)) {
        const int pc = t.node(in).shape.cols;
        if (wants(in)) {
          T* g = t.grad_ptr(in);
          for (int i = 0; i < rows; ++i)
            for (int j = 0; j < pc; ++j) g[i * pc + j] += gy[i * cols + offset + j];
        }
        offset += pc;
      }
      break;
    }
    case OpKind::kConcatRows: {
      std::size_t offset = 0;
      for (int in : t.extra_inputs(id)) {
        const std::size_t ps = t.node(in).shape.size();
        if (wants(in)) {
          T* g = t.grad_ptr(in);
          for (std::size_t i = 0; i < ps; ++i) g[i] += gy[offset + i];
        }
        offset += ps;
      }
      break;
    }
    case OpKind::kSliceCols: {
      const int in_cols = t.node(n.in0).shape.cols;
      const int cols = n.shape.cols;
      T* g = t.grad_ptr(n.in0);
      for (int i = 0; i < n.shape.rows; ++i)
        for (int j = 0; j < cols; ++j) g[i * in_cols + n.iaux + j] += gy[i * cols + j];
      break;
    }
    case OpKind::kReshape: {
      T* g = t.grad_ptr(n.in0);
      for (std::size_t i = 0; i < size; ++i) g[i] += gy[i];
      break;
    }
    case OpKind::kSigmoid: {
      T* g = t.grad_ptr(n.in0);
      for (std::size_t i = 0; i < size; ++i) g[i] += gy[i] * y[i] * (T{1} - y[i]);
      break;
    }
    case OpKind::kTanh: {
      T* g = t.grad_ptr(n.in0);
      for (std::size_t i = 0; i < size; ++i) g[i] += gy[i] * (T{1} - y[i] * y[i]);
      break;
    }
    case OpKind::kLog: {
      const T* x = t.value_ptr(n.in0);
      T* g = t.grad_ptr(n.in0);
      for (std::size_t i = 0; i < size; ++i) g[i] += gy[i] / x[i];
      break;
    }
    case OpKind::kSoftmax: {
      T dot{0};
      for (std::size_t i = 0; i < size; ++i) dot += gy[i] * y[i];
      T* g = t.grad_ptr(n.in0);
      for (std::size_t i = 0; i < size; ++i) g[i] += y[i] * (gy[i] - dot);
      break;
    }
    case OpKind::kLogSoftmax: {
      T total{0};
      for (std::size_t i = 0; i < size; ++i) total += gy[i];
      T* g = t.grad_ptr(n.in0);
      for (std::size_t i = 0; i < size; ++i) g[i] += gy[i] - std::exp(y[i]) * total;
      break;
    }
    case OpKind::kMeanRows: {
      const Shape s = t.node(n.in0).shape;
      const T inv = T{1} / static_cast<T>(s.rows);
      T* g = t.grad_ptr(n.in0);
      for (int i = 0; i < s.rows; ++i)
        for (int j = 0; j < s.cols; ++j) g[i * s.cols + j] += gy[j] * inv;
      break;
    }
    case OpKind::kEmbeddingRow: {
      T* g = t.grad_ptr(n.in0) + static_cast<std::size_t>(n.iaux) * n.shape.cols;
      for (int j = 0; j < n.shape.cols; ++j) g[j] += gy[j];
      break;
    }
    case OpKind::kSum: {
      const std::size_t in_size = t.node(n.in0).shape.size();
      T* g = t.grad_ptr(n.in0);
      for (std::size_t i = 0; i < in_size; ++i) g[i] += gy[0];
      break;
    }
    case OpKind::kPick: {
      t.grad_ptr(n.in0)[n.iaux] += gy[0];
      break;
    }
  }

  if (t.fault() == n.op) {
    // Deliberately wrong rule, used only as a gradient-check negative control.
    auto corrupt = [&](int in) {
      if (!wants(in)) return;
      T* g = t.grad_ptr(in);
      for (std::size_t i = 0; i < t.node(in).shape.size(); ++i) g[i] += T(1e-2);
    };
    corrupt(n.in0);
    corrupt(n.in1);
    for (int in : t.extra_inputs(id)) corrupt(in);
  }
}

}  // namespace detail

#define CAVP_INSTANTIATE_OPS(T)                                              \
  template Var<T> matmul(Var<T>, Var<T>);                                    \
  template Var<T> add(Var<T>, Var<T>);                                       \
  template Var<T> sub(Var<T>, Var<T>);                                       \
  template Var<T> mul(Var<T>, Var<T>);                                       \
  template Var<T> scale(Var<T>, T);                                          \
  template Var<T> add_row_broadcast(Var<T>, Var<T>);                         \
  template Var<T> repeat_rows(Var<T>, int);                                  \
  template Var<T> concat_cols(std::span<const Var<T>>);                      \
  template Var<T> concat_rows(std::span<const Var<T>>);                      \
  template Var<T> slice_cols(Var<T>, int, int);                              \
  template Var<T> reshape(Var<T>, Shape);                                    \
  template Var<T> sigmoid(Var<T>);                                           \
  template Var<T> tanh(Var<T>);                                              \
  template Var<T> log(Var<T>);                                               \
  template Var<T> softmax(Var<T>);                                           \
  template Var<T> log_softmax(Var<T>);                                       \
  template Var<T> mean_rows(Var<T>);                                         \
  template Var<T> embedding_row(Var<T>, int);                                \
  template Var<T> sum(Var<T>);                                               \
  template Var<T> pick(Var<T>, int);                                         \
  template void detail::backprop(Tape<T>&, int);

CAVP_INSTANTIATE_OPS(float)
CAVP_INSTANTIATE_OPS(double)

#undef CAVP_INSTANTIATE_OPS

}  // namespace cavp::ad
