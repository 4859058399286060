// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "cavp/data/dataset.hpp"
#include "cavp/data/vocabulary.hpp"
#include "cavp/metrics/corpus.hpp"
#include "cavp/model/model.hpp"

namespace cavp::training {

/// Beam width 1 runs the greedy decoder.
std::vector<Trajectory> decode_images(const CaptionModel<float>& model, const data::Dataset& dataset, std::span<const std::size_t> positions,
                                      int beam, int threads = 1, bool record_attention = false);

/// Fraction of images whose greedy caption equals one of their references.
double exact_match_rate(const CaptionModel<float>& model, const data::Vocabulary& vocab, const data::Dataset& dataset,
                        std::span<const std::size_t> positions, int threads = 1);

metrics::MetricReport score_trajectories(const data::Vocabulary& vocab, const data::Dataset& dataset, std::span<const std::size_t> positions,
                                         std::span<const Trajectory> trajectories, std::span<const std::string> metric_names);

}  // namespace cavp::training
