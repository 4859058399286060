// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cavp/metrics/ngram.hpp"

namespace cavp::data {

using metrics::TokenSequence;

/// Token <-> index map. Ids 0..3 are <pad>, <bos>, <eos>, <unk>; kept words
/// follow in lexicographic order.
class Vocabulary {
 public:
  Vocabulary();

  /// Keeps words occurring at least `min_count` times over all captions.
  static Vocabulary build(std::span<const TokenSequence> captions, int min_count);

  /// Restores a vocabulary from its full token list (specials first).
  static Vocabulary from_tokens(const std::vector<std::string>& tokens, int min_count = 1);

  int size() const { return static_cast<int>(tokens_.size()); }
  int min_count() const { return min_count_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool contains(std::string_view word) const;
  /// Index of a word, <unk> when absent.
  int index(std::string_view word) const;
  const std::string& token(int id) const;

  std::vector<int> encode(const TokenSequence& words) const;
  /// Drops special tokens.
  TokenSequence decode(std::span<const int> ids) const;

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int, std::less<>> index_;
  int min_count_ = 1;
};

}  // namespace cavp::data
