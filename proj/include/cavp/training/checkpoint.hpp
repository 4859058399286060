// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cavp/data/vocabulary.hpp"
#include "cavp/model/model.hpp"
#include "cavp/training/optimizer.hpp"

namespace cavp::training {

/// Checkpoint file layout (little-endian):
///
///   0    8   magic "CAVPCKPT"
///   8    4   u32 version (1)
///   12   8   u64 header length H
///   20   H   UTF-8 JSON header: model config, train config echo, vocabulary,
///            sharing map, parameter names and shapes in storage order,
///            phase, epoch, optimizer step, RNG state, has_moments
///   20+H     f32 parameter values in header order, then (if has_moments)
///            the Adam first moments and second moments in the same order
inline constexpr char kCheckpointMagic[8] = {'C', 'A', 'V', 'P', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct TrainingState {
  std::string phase = "xe";
  int epoch = 0;
  std::uint64_t optimizer_steps = 0;
  std::string rng_state;
};

nlohmann::json model_config_to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

struct Checkpoint {
  ModelConfig config;
  nlohmann::json train_config;
  data::Vocabulary vocab;
  TrainingState state;
  std::unique_ptr<CaptionModel<float>> model;
  /// Present when the checkpoint carries optimizer moments.
  std::optional<std::vector<std::vector<float>>> first_moments;
  std::optional<std::vector<std::vector<float>>> second_moments;
};

void save_checkpoint(const std::filesystem::path& path, const CaptionModel<float>& model, const data::Vocabulary& vocab,
                     const nlohmann::json& train_config, const TrainingState& state, const Adam* optimizer);

/// Throws DataError on a malformed or truncated file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cavp::training
