// SPDX-License-Identifier: Apache-2.0
//
// Differentiable primitives. All inputs must live on the same tape; shape
// violations throw ShapeError naming both shapes.
#pragma once

#include <span>
#include <vector>

#include "cavp/autodiff/tape.hpp"

namespace cavp::ad {

template <typename T> Var<T> matmul(Var<T> a, Var<T> b);
template <typename T> Var<T> add(Var<T> a, Var<T> b);
template <typename T> Var<T> sub(Var<T> a, Var<T> b);
template <typename T> Var<T> mul(Var<T> a, Var<T> b);
template <typename T> Var<T> scale(Var<T> a, T factor);

/// m x n matrix plus a 1 x n row added to every row.
template <typename T> Var<T> add_row_broadcast(Var<T> m, Var<T> row);
/// 1 x n row tiled into k x n.
template <typename T> Var<T> repeat_rows(Var<T> row, int k);
/// Horizontal concatenation; all parts share the row count.
template <typename T> Var<T> concat_cols(std::span<const Var<T>> parts);
/// Vertical concatenation; all parts share the column count.
template <typename T> Var<T> concat_rows(std::span<const Var<T>> parts);
template <typename T> Var<T> slice_cols(Var<T> a, int start, int count);
template <typename T> Var<T> reshape(Var<T> a, Shape shape);

template <typename T> Var<T> sigmoid(Var<T> a);
template <typename T> Var<T> tanh(Var<T> a);
template <typename T> Var<T> log(Var<T> a);
/// Softmax over all elements (max-subtracted).
template <typename T> Var<T> softmax(Var<T> a);
/// Log-softmax over all elements, computed as x - logsumexp(x).
template <typename T> Var<T> log_softmax(Var<T> a);

/// k x n -> 1 x n average of the rows.
template <typename T> Var<T> mean_rows(Var<T> a);
/// Row `index` of a V x n embedding table, as a 1 x n vector.
template <typename T> Var<T> embedding_row(Var<T> table, int index);
template <typename T> Var<T> sum(Var<T> a);
/// Element `index` (row-major) as a 1 x 1 scalar.
template <typename T> Var<T> pick(Var<T> a, int index);

template <typename T>
Var<T> concat_cols(std::initializer_list<Var<T>> parts) {
  std::vector<Var<T>> v(parts);
  return concat_cols<T>(std::span<const Var<T>>(v));
}

template <typename T>
Var<T> concat_rows(std::initializer_list<Var<T>> parts) {
  std::vector<Var<T>> v(parts);
  return concat_rows<T>(std::span<const Var<T>>(v));
}

}  // namespace cavp::ad
