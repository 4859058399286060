// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "cavp/data/records.hpp"

namespace cavp::data {

enum class Split { kTrain, kVal, kTest };

std::string_view split_name(Split s);
Split parse_split(std::string_view name);

/// 80/10/10 split as a pure function of image id and seed.
Split split_of(std::uint64_t image_id, std::uint64_t seed);

struct DatasetInfo {
  std::uint64_t seed = 0;
  bool deterministic = false;
  int regions = 0;
  int feature_dim = 0;
};

/// Features and captions aligned by position and sorted by image id.
struct Dataset {
  DatasetInfo info;
  std::vector<FeatureRecord> features;
  std::vector<CaptionRecord> captions;
  Lexicon lexicon;
  /// Empty for data that did not come from the generator.
  std::vector<SceneDescription> scenes;

  std::size_t size() const { return features.size(); }
  /// Positions of the records that fall in `split`, in id order.
  std::vector<std::size_t> indices(Split split) const;
  /// Throws DataError if ids are unsorted, duplicated or unaligned.
  void validate() const;
  std::vector<TokenSequence> all_references(std::span<const std::size_t> positions) const;
};

/// Directory layout: features.bin, captions.jsonl, lexicon.jsonl,
/// scenes.jsonl (optional), dataset.json.
inline constexpr std::string_view kFeaturesFile = "features.bin";
inline constexpr std::string_view kCaptionsFile = "captions.jsonl";
inline constexpr std::string_view kLexiconFile = "lexicon.jsonl";
inline constexpr std::string_view kScenesFile = "scenes.jsonl";
inline constexpr std::string_view kDatasetInfoFile = "dataset.json";

/// Returns the paths written.
std::vector<std::filesystem::path> save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace cavp::data
