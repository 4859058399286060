// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cavp/metrics/ngram.hpp"

namespace cavp::metrics {

inline constexpr int kCiderMaxN = 4;
inline constexpr double kCiderSigma = 6.0;

/// Document frequencies of 1..4-grams over a reference corpus, where a
/// document is the union of one image's references.
class TfIdfIndex {
 public:
  TfIdfIndex() = default;

  /// One entry per image: that image's reference captions.
  static TfIdfIndex build(std::span<const std::vector<TokenSequence>> corpus);

  int documents() const { return documents_; }
  /// Number of documents containing the n-gram (order = word count).
  int document_frequency(const std::string& ngram, int order) const;
  /// log(N), or 1.0 for a single-document corpus so idf stays informative.
  double log_documents() const { return log_documents_; }

 private:
  int documents_ = 0;
  double log_documents_ = 0.0;
  std::array<std::unordered_map<std::string, int>, kCiderMaxN> df_;
};

/// CIDEr-D in [0, 10]: tf-idf n-gram vectors, clipped cosine similarity,
/// Gaussian length penalty (sigma 6), averaged over references and over
/// n = 1..4, times 10. Throws ContractError when the index was not built
/// over a corpus containing these references.
double cider_d(const TokenSequence& candidate, std::span<const TokenSequence> references, const TfIdfIndex& index,
               double sigma = kCiderSigma);

}  // namespace cavp::metrics
