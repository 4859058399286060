// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cavp/autodiff/tape.hpp"

namespace cavp::ad {

struct GradcheckOptions {
  double eps = 1e-5;
  double tolerance = 1e-4;
  /// Corrupts the backward rule of one op (negative control).
  std::optional<OpKind> fault;
};

struct GradcheckEntry {
  std::string name;
  /// Relative error of the full gradient vector (all parameters); gates pass.
  double max_rel_error = 0.0;
  /// Diagnostic: parameter array with the largest per-array relative error.
  std::string worst_parameter;
  double worst_array_error = 0.0;
  std::size_t scalars = 0;
  bool passed = true;
};

/// ||a - n|| / max(||a|| + ||n||, 1e-12).
double relative_error(std::span<const double> analytic, std::span<const double> numeric);

using LossBuilder = std::function<Var<double>(Tape<double>&)>;

/// Compares reverse-mode gradients of `build` with central differences for
/// every scalar of every parameter in `store`.
GradcheckEntry check_gradients(const std::string& name, ParameterStore<double>& store, const LossBuilder& build,
                               const GradcheckOptions& options);

/// One entry per differentiable primitive, worst error over `seeds` draws.
std::vector<GradcheckEntry> check_primitives(std::uint64_t seed, int seeds, const GradcheckOptions& options);

}  // namespace cavp::ad
