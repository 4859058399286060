// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace cavp::metrics {

/// Ordered lowercase tokens without special markers.
using TokenSequence = std::vector<std::string>;

/// n-gram (tokens joined by single spaces) -> occurrence count.
using NgramCounts = std::map<std::string, int>;

/// Whitespace split + lowercase.
TokenSequence tokenize(std::string_view text);

std::string join(const TokenSequence& tokens);

/// All n-grams of exactly order n.
NgramCounts count_ngrams(const TokenSequence& tokens, int n);

}  // namespace cavp::metrics
