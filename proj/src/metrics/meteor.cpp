// SPDX-License-Identifier: Apache-2.0
#include "cavp/metrics/meteor.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "cavp/common/errors.hpp"

namespace cavp::metrics {
namespace {

class ChunkSearch {
 public:
  ChunkSearch(const TokenSequence& cand, const TokenSequence& ref, long budget) : cand_(cand), budget_(budget) {
    std::map<std::string, int> word_ids;
    for (const auto& w : cand) word_ids.emplace(w, static_cast<int>(word_ids.size()));
    for (const auto& w : ref) word_ids.emplace(w, static_cast<int>(word_ids.size()));
    const std::size_t words = word_ids.size();
    cand_word_.reserve(cand.size());
    for (const auto& w : cand) cand_word_.push_back(word_ids.at(w));
    ref_positions_.assign(words, {});
    for (std::size_t j = 0; j < ref.size(); ++j) ref_positions_[static_cast<std::size_t>(word_ids.at(ref[j]))].push_back(static_cast<int>(j));
    std::vector<int> cand_count(words, 0);
    for (int w : cand_word_) ++cand_count[static_cast<std::size_t>(w)];
    skip_budget_.assign(words, 0);
    for (std::size_t w = 0; w < words; ++w) {
      const int rc = static_cast<int>(ref_positions_[w].size());
      skip_budget_[w] = std::max(0, cand_count[w] - rc);
      max_matches_ += std::min(cand_count[w], rc);
    }
    used_.assign(ref.size(), false);
  }

  Alignment run() {
    best_chunks_ = max_matches_ == 0 ? 0 : static_cast<int>(cand_.size()) + 1;
    if (max_matches_ > 0) dfs(0, -2, 0);
    return {max_matches_, best_chunks_};
  }

 private:
  // prev_ref: reference position matched by candidate i-1, or -2 if unmatched.
  void dfs(std::size_t i, int prev_ref, int chunks) {
    if (chunks >= best_chunks_ || nodes_ >= budget_) return;
    ++nodes_;
    if (i == cand_word_.size()) {
      best_chunks_ = chunks;
      return;
    }
    const auto w = static_cast<std::size_t>(cand_word_[i]);
    const auto& positions = ref_positions_[w];
    // Extending the current chunk first finds good bounds early.
    if (prev_ref >= -1) {
      for (int j : positions) {
        if (j == prev_ref + 1 && !used_[static_cast<std::size_t>(j)]) {
          used_[static_cast<std::size_t>(j)] = true;
          dfs(i + 1, j, chunks);
          used_[static_cast<std::size_t>(j)] = false;
        }
      }
    }
    for (int j : positions) {
      if (used_[static_cast<std::size_t>(j)] || (prev_ref >= -1 && j == prev_ref + 1)) continue;
      used_[static_cast<std::size_t>(j)] = true;
      dfs(i + 1, j, chunks + 1);
      used_[static_cast<std::size_t>(j)] = false;
    }
    if (skip_budget_[w] > 0) {
      --skip_budget_[w];
      dfs(i + 1, -2, chunks);
      ++skip_budget_[w];
    }
  }

  const TokenSequence& cand_;
  long budget_;
  long nodes_ = 0;
  std::vector<int> cand_word_;
  std::vector<std::vector<int>> ref_positions_;
  std::vector<int> skip_budget_;
  std::vector<bool> used_;
  int max_matches_ = 0;
  int best_chunks_ = 0;
};

}  // namespace

Alignment align_exact(const TokenSequence& candidate, const TokenSequence& reference, long node_budget) {
  return ChunkSearch(candidate, reference, node_budget).run();
}

double meteor_from_alignment(const Alignment& a, std::size_t candidate_len, std::size_t reference_len, const MeteorParams& p) {
  if (a.matches == 0 || candidate_len == 0 || reference_len == 0) return 0.0;
  const double m = a.matches;
  const double precision = m / static_cast<double>(candidate_len);
  const double recall = m / static_cast<double>(reference_len);
  const double fmean = precision * recall / (p.alpha * precision + (1.0 - p.alpha) * recall);
  const double penalty = p.gamma * std::pow(static_cast<double>(a.chunks) / m, p.theta);
  return fmean * (1.0 - penalty);
}

double meteor_lite(const TokenSequence& candidate, std::span<const TokenSequence> references, const MeteorParams& p) {
  if (references.empty()) throw ContractError("meteor_lite: empty reference set");
  double best = 0.0;
  for (const auto& ref : references) {
    best = std::max(best, meteor_from_alignment(align_exact(candidate, ref), candidate.size(), ref.size(), p));
  }
  return best;
}

}  // namespace cavp::metrics
