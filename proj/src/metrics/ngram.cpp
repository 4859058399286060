// SPDX-License-Identifier: Apache-2.0
#include "cavp/metrics/ngram.hpp"

#include <cctype>

namespace cavp::metrics {

TokenSequence tokenize(std::string_view text) {
  TokenSequence out;
  std::string cur;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string join(const TokenSequence& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

NgramCounts count_ngrams(const TokenSequence& tokens, int n) {
  NgramCounts counts;
  if (n <= 0 || tokens.size() < static_cast<std::size_t>(n)) return counts;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (int k = 1; k < n; ++k) {
      key.push_back(' ');
      key += tokens[i + static_cast<std::size_t>(k)];
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace cavp::metrics
