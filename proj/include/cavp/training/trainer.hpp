// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cavp/data/dataset.hpp"
#include "cavp/data/vocabulary.hpp"
#include "cavp/metrics/reward.hpp"
#include "cavp/model/model.hpp"
#include "cavp/training/optimizer.hpp"

namespace cavp::training {

enum class Phase { kXe, kScst };

std::string_view phase_name(Phase p);
Phase parse_phase(std::string_view name);

struct TrainConfig {
  Phase phase = Phase::kXe;
  metrics::RewardKind reward = metrics::RewardKind::kCiderD;
  LrSchedule schedule;
  AdamConfig adam;
  int batch_size = 16;
  int epochs = 30;
  /// Weight of the output sub-policy cloning loss; xe phase only.
  double cloning_weight = 0.1;
  std::uint64_t seed = 0;
  int threads = 1;
  /// Vocabulary threshold over training references.
  int min_count = 5;
  std::string profile = "desk";
  /// Layout; vocab size, k and D are filled in from the data.
  ModelConfig model;

  static TrainConfig desk(Phase phase);
  /// Published schedule and sizes; not runnable on a desk machine.
  static TrainConfig paper(Phase phase);

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct EpochRecord {
  Phase phase = Phase::kXe;
  int epoch = 0;
  double loss = 0.0;
  double learning_rate = 0.0;
  double grad_norm = 0.0;  // mean pre-clip norm over batches
  double sample_reward = 0.0;
  double greedy_reward = 0.0;
  double advantage = 0.0;
  int skipped = 0;
  std::size_t images = 0;
  double seconds = 0.0;  // not written to the metrics log
  std::string checkpoint;

  nlohmann::json to_json() const;
};

struct TrainOptions {
  std::filesystem::path out_dir;
  /// Starting parameters (required for scst).
  std::optional<std::filesystem::path> init;
  /// Continue an interrupted run from one of its checkpoints.
  std::optional<std::filesystem::path> resume;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochRecord> epochs;
  std::vector<std::filesystem::path> checkpoints;
  data::Vocabulary vocab;
  std::unique_ptr<CaptionModel<float>> model;
};

/// "epoch_003.ckpt"; epoch 0 holds the starting parameters.
std::string checkpoint_name(int epoch);
inline constexpr std::string_view kMetricsLog = "metrics.jsonl";

/// Runs the configured phase on the training split, writing one checkpoint
/// per epoch and one metrics line per epoch under `options.out_dir`.
/// Deterministic for a given config, data and seed, for any thread count.
TrainResult train(const TrainConfig& config, const data::Dataset& dataset, const TrainOptions& options);

}  // namespace cavp::training
