// SPDX-License-Identifier: Apache-2.0
#include "cavp/training/evaluation.hpp"

#include <thread>

#include "cavp/common/errors.hpp"
#include "cavp/decoding/decoder.hpp"

namespace cavp::training {

std::vector<Trajectory> decode_images(const CaptionModel<float>& model, const data::Dataset& dataset, std::span<const std::size_t> positions,
                                      int beam, int threads, bool record_attention) {
  std::vector<Trajectory> out(positions.size());
  decoding::DecodeOptions opts;
  opts.record_attention = record_attention;
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& f = dataset.features.at(positions[i]).features;
      out[i] = beam <= 1 ? decoding::greedy_decode(model, f, opts) : decoding::beam_decode(model, f, beam, opts);
    }
  };
  if (beam < 1) throw ContractError("beam width must be >= 1");
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, threads)), positions.size());
  if (workers <= 1) {
    work(0, positions.size());
    return out;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (positions.size() + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w * chunk, std::min(positions.size(), (w + 1) * chunk));
  for (auto& t : pool) t.join();
  return out;
}

double exact_match_rate(const CaptionModel<float>& model, const data::Vocabulary& vocab, const data::Dataset& dataset,
                        std::span<const std::size_t> positions, int threads) {
  if (positions.empty()) return 0.0;
  const auto decoded = decode_images(model, dataset, positions, 1, threads);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const auto words = vocab.decode(decoded[i].words());
    for (const auto& ref : dataset.captions[positions[i]].references) {
      if (words == ref) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(positions.size());
}

metrics::MetricReport score_trajectories(const data::Vocabulary& vocab, const data::Dataset& dataset, std::span<const std::size_t> positions,
                                         std::span<const Trajectory> trajectories, std::span<const std::string> metric_names) {
  if (positions.size() != trajectories.size()) throw ContractError("score_trajectories: count mismatch");
  std::vector<metrics::TokenSequence> cands;
  std::vector<std::vector<metrics::TokenSequence>> refs;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    cands.push_back(vocab.decode(trajectories[i].words()));
    refs.push_back(dataset.captions.at(positions[i]).references);
  }
  return metrics::evaluate_corpus(cands, refs, metric_names);
}

}  // namespace cavp::training
