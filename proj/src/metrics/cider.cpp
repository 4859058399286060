// SPDX-License-Identifier: Apache-2.0
#include "cavp/metrics/cider.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cavp/common/errors.hpp"

namespace cavp::metrics {
namespace {

struct TfIdfVector {
  std::map<std::string, double> weights;
  double norm = 0.0;
};

TfIdfVector vectorize(const TokenSequence& tokens, int order, const TfIdfIndex& index) {
  TfIdfVector v;
  double sq = 0.0;
  for (const auto& [g, tf] : count_ngrams(tokens, order)) {
    const double df = std::max(1.0, static_cast<double>(index.document_frequency(g, order)));
    const double w = static_cast<double>(tf) * (index.log_documents() - std::log(df));
    v.weights.emplace(g, w);
    sq += w * w;
  }
  v.norm = std::sqrt(sq);
  return v;
}

double clipped_cosine(const TfIdfVector& cand, const TfIdfVector& ref) {
  if (cand.norm == 0.0 || ref.norm == 0.0) return 0.0;
  double dot = 0.0;
  for (const auto& [g, wc] : cand.weights) {
    auto it = ref.weights.find(g);
    if (it != ref.weights.end()) dot += std::min(wc, it->second) * it->second;
  }
  return dot / (cand.norm * ref.norm);
}

}  // namespace

TfIdfIndex TfIdfIndex::build(std::span<const std::vector<TokenSequence>> corpus) {
  TfIdfIndex index;
  index.documents_ = static_cast<int>(corpus.size());
  index.log_documents_ = corpus.size() == 1 ? 1.0 : (corpus.empty() ? 0.0 : std::log(static_cast<double>(corpus.size())));
  for (const auto& refs : corpus) {
    for (int n = 1; n <= kCiderMaxN; ++n) {
      std::set<std::string> seen;
      for (const auto& ref : refs)
        for (const auto& [g, c] : count_ngrams(ref, n)) seen.insert(g);
      auto& df = index.df_[static_cast<std::size_t>(n - 1)];
      for (const auto& g : seen) ++df[g];
    }
  }
  return index;
}

int TfIdfIndex::document_frequency(const std::string& ngram, int order) const {
  if (order < 1 || order > kCiderMaxN) throw ContractError("cider: n-gram order out of range");
  const auto& df = df_[static_cast<std::size_t>(order - 1)];
  auto it = df.find(ngram);
  return it == df.end() ? 0 : it->second;
}

double cider_d(const TokenSequence& candidate, std::span<const TokenSequence> references, const TfIdfIndex& index, double sigma) {
  if (references.empty()) throw ContractError("cider_d: empty reference set");
  if (index.documents() == 0) throw ContractError("cider_d: tf-idf index is empty");
  double total = 0.0;
  for (int n = 1; n <= kCiderMaxN; ++n) {
    const TfIdfVector cv = vectorize(candidate, n, index);
    double acc = 0.0;
    for (const auto& ref : references) {
      for (const auto& [g, c] : count_ngrams(ref, n)) {
        if (index.document_frequency(g, n) == 0) {
          throw ContractError("cider_d: reference n-gram '" + g + "' is absent from the tf-idf index; build the index over the corpus being scored");
        }
      }
      const TfIdfVector rv = vectorize(ref, n, index);
      const double delta = static_cast<double>(candidate.size()) - static_cast<double>(ref.size());
      acc += clipped_cosine(cv, rv) * std::exp(-(delta * delta) / (2.0 * sigma * sigma));
    }
    total += acc / static_cast<double>(references.size());
  }
  return std::clamp(10.0 * total / kCiderMaxN, 0.0, 10.0);
}

}  // namespace cavp::metrics
