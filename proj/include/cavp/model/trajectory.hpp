// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

namespace cavp {

/// Attention distributions of one decoding step, copied off the tape.
/// `context` is empty unless the variant attends over its visual context;
/// `composition` and `output` are empty for the Single variant.
struct AttentionRecord {
  std::vector<double> single;
  std::vector<double> context;
  std::vector<double> composition;
  std::vector<double> output;  // (single, composition)
};

struct TrajectoryStep {
  int token = 0;
  double log_prob = 0.0;
  AttentionRecord attention;
};

/// A decoded caption. Steps include the end-of-sequence step when the
/// decoder emitted one; `finished` tells whether it did.
struct Trajectory {
  std::vector<TrajectoryStep> steps;
  double total_log_prob = 0.0;
  bool finished = false;

  std::vector<int> tokens() const;
  /// Tokens with special ids removed (what metrics see).
  std::vector<int> words() const;
  std::vector<double> step_log_probs() const;
};

}  // namespace cavp
