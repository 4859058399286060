// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "cavp/metrics/ngram.hpp"

namespace cavp::metrics {

/// bleu1..bleu4, rougeL, meteorlite, ciderD.
const std::vector<std::string>& corpus_metric_names();

/// Comma-separated list; "all" expands to every metric.
std::vector<std::string> parse_metric_list(const std::string& list);

struct MetricReport {
  std::size_t images = 0;
  std::map<std::string, double> scores;
};

/// Corpus scores: BLEU pools statistics over the corpus (no smoothing),
/// the other metrics average sentence scores. CIDEr-D document frequencies
/// come from the references being scored.
MetricReport evaluate_corpus(std::span<const TokenSequence> candidates, std::span<const std::vector<TokenSequence>> references,
                             std::span<const std::string> metrics);

}  // namespace cavp::metrics
