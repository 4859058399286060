// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cavp/data/dataset.hpp"

namespace cavp::data {

/// Feature layout of a synthetic region (first 17 dims; the rest carry
/// nuisance texture values):
///   [0, 6)   noun one-hot       [6, 12)  color one-hot
///   [12, 14) size one-hot       14 x, 15 y, 16 objectness
/// Distractor regions have objectness 0 and empty one-hot blocks.
namespace layout {
inline constexpr int kNoun = 0;
inline constexpr int kColor = 6;
inline constexpr int kSize = 12;
inline constexpr int kX = 14;
inline constexpr int kY = 15;
inline constexpr int kObjectness = 16;
inline constexpr int kMinDim = 17;
}  // namespace layout

inline constexpr std::array<std::string_view, 6> kNouns = {"man", "woman", "dog", "cat", "horse", "bird"};
inline constexpr std::array<std::string_view, 6> kColors = {"red", "blue", "green", "yellow", "black", "white"};
inline constexpr std::array<std::string_view, 2> kSizes = {"small", "large"};
inline constexpr std::array<std::string_view, 3> kRelations = {"left of", "above", "riding"};

struct GrammarConfig {
  int regions = 8;
  int feature_dim = 24;
  double noise = 0.05;
  /// One canonical caption per scene, exactly two objects.
  bool deterministic = false;
  int min_objects = 2;
  int max_objects = 3;
  int min_references = 3;
  int max_references = 5;

  void validate() const;
};

/// Relation holding between object `a` (subject) and `b`, if any. The
/// three predicates are mutually exclusive.
std::optional<std::string> geometric_relation(const SceneObject& a, const SceneObject& b);

/// Surface forms of a relation: its own phrase and the inverse phrase
/// (subject and object swapped), e.g. "above" / "below".
std::string_view inverse_relation(std::string_view relation);

/// Lexicon covering every word the grammar can emit.
Lexicon grammar_lexicon();

Dataset generate_scenes(std::size_t count, std::uint64_t seed, const GrammarConfig& config);

/// One caption that names a relation which the scene graph does not back.
struct AuditFinding {
  std::uint64_t image_id = 0;
  std::string caption;
  std::string reason;
};

struct AuditReport {
  std::size_t relation_mentions = 0;
  std::size_t backed = 0;
  std::vector<AuditFinding> findings;
};

/// Parses every caption back into (subject, relation, object) and checks the
/// scene graph holds that relation between matching objects.
AuditReport audit_relations(const Dataset& dataset);

}  // namespace cavp::data
