// SPDX-License-Identifier: Apache-2.0
#include "cavp/data/vocabulary.hpp"

#include "cavp/common/errors.hpp"
#include "cavp/common/tokens.hpp"

namespace cavp::data {

Vocabulary::Vocabulary() {
  for (auto t : {tokens::kPadText, tokens::kBosText, tokens::kEosText, tokens::kUnkText}) {
    index_.emplace(std::string(t), static_cast<int>(tokens_.size()));
    tokens_.emplace_back(t);
  }
}

Vocabulary Vocabulary::build(std::span<const TokenSequence> captions, int min_count) {
  if (min_count < 1) throw ContractError("vocabulary: min_count must be >= 1");
  std::map<std::string, int> counts;
  for (const auto& cap : captions)
    for (const auto& w : cap) ++counts[w];
  Vocabulary v;
  v.min_count_ = min_count;
  for (const auto& [w, c] : counts) {
    if (c < min_count || v.index_.count(w)) continue;
    v.index_.emplace(w, static_cast<int>(v.tokens_.size()));
    v.tokens_.push_back(w);
  }
  return v;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens, int min_count) {
  if (tokens.size() < static_cast<std::size_t>(tokens::kSpecialCount) || tokens[0] != tokens::kPadText || tokens[1] != tokens::kBosText ||
      tokens[2] != tokens::kEosText || tokens[3] != tokens::kUnkText) {
    throw DataError("vocabulary: token list must start with <pad> <bos> <eos> <unk>");
  }
  Vocabulary v;
  v.min_count_ = min_count;
  for (std::size_t i = tokens::kSpecialCount; i < tokens.size(); ++i) {
    if (!v.index_.emplace(tokens[i], static_cast<int>(v.tokens_.size())).second) throw DataError("vocabulary: duplicate token " + tokens[i]);
    v.tokens_.push_back(tokens[i]);
  }
  return v;
}

bool Vocabulary::contains(std::string_view word) const { return index_.find(word) != index_.end(); }

int Vocabulary::index(std::string_view word) const {
  auto it = index_.find(word);
  return it == index_.end() ? tokens::kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) throw ContractError("vocabulary: id " + std::to_string(id) + " out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(const TokenSequence& words) const {
  std::vector<int> ids;
  ids.reserve(words.size());
  for (const auto& w : words) ids.push_back(index(w));
  return ids;
}

TokenSequence Vocabulary::decode(std::span<const int> ids) const {
  TokenSequence out;
  for (int id : ids) {
    if (tokens::is_special(id)) continue;
    out.push_back(token(id));
  }
  return out;
}

}  // namespace cavp::data
