// SPDX-License-Identifier: Apache-2.0
#include "cavp/data/records.hpp"

#include "cavp/common/errors.hpp"

namespace cavp::data {

TokenSequence preprocess_caption(std::string_view text) {
  TokenSequence tokens = metrics::tokenize(text);
  if (tokens.size() > kMaxCaptionTokens) tokens.resize(kMaxCaptionTokens);
  return tokens;
}

std::string_view category_name(LexCategory c) {
  switch (c) {
    case LexCategory::kObject: return "object";
    case LexCategory::kAttribute: return "attribute";
    case LexCategory::kRelation: return "relation";
    case LexCategory::kFunction: return "function";
  }
  return "unknown";
}

LexCategory parse_category(std::string_view name) {
  if (name == "object") return LexCategory::kObject;
  if (name == "attribute") return LexCategory::kAttribute;
  if (name == "relation") return LexCategory::kRelation;
  if (name == "function") return LexCategory::kFunction;
  throw DataError("unknown lexicon category '" + std::string(name) + "'");
}

void Lexicon::add(const std::string& token, LexCategory category) {
  auto [it, inserted] = entries_.emplace(token, category);
  if (!inserted && it->second != category) throw DataError("lexicon: conflicting categories for '" + token + "'");
}

std::optional<LexCategory> Lexicon::category(std::string_view token) const {
  auto it = entries_.find(token);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

}  // namespace cavp::data
