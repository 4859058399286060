// SPDX-License-Identifier: Apache-2.0
#include "cavp/metrics/corpus.hpp"

#include <algorithm>
#include <sstream>

#include "cavp/common/errors.hpp"
#include "cavp/metrics/bleu.hpp"
#include "cavp/metrics/cider.hpp"
#include "cavp/metrics/meteor.hpp"
#include "cavp/metrics/rouge.hpp"

namespace cavp::metrics {

const std::vector<std::string>& corpus_metric_names() {
  static const std::vector<std::string> names = {"bleu1", "bleu2", "bleu3", "bleu4", "rougeL", "meteorlite", "ciderD"};
  return names;
}

std::vector<std::string> parse_metric_list(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    if (item == "all") {
      for (const auto& n : corpus_metric_names())
        if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
      continue;
    }
    const auto& known = corpus_metric_names();
    if (std::find(known.begin(), known.end(), item) == known.end()) {
      throw ContractError("unknown metric '" + item + "' (choices: bleu1..bleu4, rougeL, meteorlite, ciderD, all)");
    }
    if (std::find(out.begin(), out.end(), item) == out.end()) out.push_back(item);
  }
  return out;
}

MetricReport evaluate_corpus(std::span<const TokenSequence> candidates, std::span<const std::vector<TokenSequence>> references,
                             std::span<const std::string> metrics) {
  if (candidates.size() != references.size()) throw ContractError("evaluate_corpus: candidate/reference count mismatch");
  MetricReport report;
  report.images = candidates.size();
  if (candidates.empty()) return report;
  for (const auto& refs : references)
    if (refs.empty()) throw ContractError("evaluate_corpus: image without references");

  const bool need_cider = std::find(metrics.begin(), metrics.end(), "ciderD") != metrics.end();
  TfIdfIndex index;
  if (need_cider) index = TfIdfIndex::build(references);

  const double n = static_cast<double>(candidates.size());
  for (const auto& m : metrics) {
    if (m.rfind("bleu", 0) == 0) {
      report.scores[m] = corpus_bleu(candidates, references, std::stoi(m.substr(4)));
    } else if (m == "rougeL") {
      double acc = 0.0;
      for (std::size_t i = 0; i < candidates.size(); ++i) acc += rouge_l(candidates[i], references[i]);
      report.scores[m] = acc / n;
    } else if (m == "meteorlite") {
      double acc = 0.0;
      for (std::size_t i = 0; i < candidates.size(); ++i) acc += meteor_lite(candidates[i], references[i]);
      report.scores[m] = acc / n;
    } else if (m == "ciderD") {
      double acc = 0.0;
      for (std::size_t i = 0; i < candidates.size(); ++i) acc += cider_d(candidates[i], references[i], index);
      report.scores[m] = acc / n;
    } else {
      throw ContractError("evaluate_corpus: unknown metric " + m);
    }
  }
  return report;
}

}  // namespace cavp::metrics
