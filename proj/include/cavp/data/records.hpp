// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cavp/metrics/ngram.hpp"
#include "cavp/model/region_features.hpp"

namespace cavp::data {

using metrics::TokenSequence;

/// References longer than this are cut before vocabulary counting.
inline constexpr std::size_t kMaxCaptionTokens = 16;

struct FeatureRecord {
  std::uint64_t image_id = 0;
  RegionFeatureSet features;
};

struct CaptionRecord {
  std::uint64_t image_id = 0;
  std::vector<TokenSequence> references;
};

/// Tokenizes, lowercases and trims a raw caption.
TokenSequence preprocess_caption(std::string_view text);

enum class LexCategory { kObject, kAttribute, kRelation, kFunction };

std::string_view category_name(LexCategory c);
LexCategory parse_category(std::string_view name);

class Lexicon {
 public:
  void add(const std::string& token, LexCategory category);
  std::optional<LexCategory> category(std::string_view token) const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::map<std::string, LexCategory, std::less<>>& entries() const { return entries_; }

 private:
  std::map<std::string, LexCategory, std::less<>> entries_;
};

struct SceneObject {
  std::string noun;
  std::string color;
  std::string size;
  double x = 0.0;
  double y = 0.0;
  /// Slot in the region feature matrix holding this object.
  int region = 0;
};

struct SceneRelation {
  int subject = 0;
  int object = 0;
  std::string relation;
};

/// Ground-truth scene graph behind a synthetic image.
struct SceneDescription {
  std::uint64_t image_id = 0;
  std::vector<SceneObject> objects;
  std::vector<SceneRelation> relations;
};

}  // namespace cavp::data
