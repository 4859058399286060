// SPDX-License-Identifier: Apache-2.0
#include "cavp/data/scene_generator.hpp"

#include <cmath>
#include <numbers>

#include "cavp/common/errors.hpp"
#include "cavp/common/random.hpp"

namespace cavp::data {
namespace {

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

std::size_t pick(Rng& rng, std::size_t n) { return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)); }

int pick_int(Rng& rng, int lo, int hi) { return lo + static_cast<int>(pick(rng, static_cast<std::size_t>(hi - lo + 1))); }

// Box-Muller on our own uniform draws so files do not depend on the
// standard library's distribution implementation.
double gaussian(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

SceneObject random_object(Rng& rng) {
  SceneObject o;
  o.noun = std::string(kNouns[pick(rng, kNouns.size())]);
  o.color = std::string(kColors[pick(rng, kColors.size())]);
  o.size = std::string(kSizes[pick(rng, kSizes.size())]);
  return o;
}

// Places subject `s` and object `o` so that `relation` holds with margin.
void place_pair(Rng& rng, std::string_view relation, SceneObject& s, SceneObject& o) {
  if (relation == "left of") {
    s.x = uniform(rng, 0.05, 0.30);
    o.x = s.x + uniform(rng, 0.50, 0.65);
    const double c = uniform(rng, 0.2, 0.8);
    s.y = c + uniform(rng, -0.1, 0.1);
    o.y = c + uniform(rng, -0.1, 0.1);
  } else if (relation == "above") {
    const double c = uniform(rng, 0.2, 0.8);
    s.x = c + uniform(rng, -0.1, 0.1);
    o.x = c + uniform(rng, -0.1, 0.1);
    o.y = uniform(rng, 0.05, 0.40);
    s.y = o.y + uniform(rng, 0.45, 0.55);
  } else {
    o.x = uniform(rng, 0.15, 0.85);
    o.y = uniform(rng, 0.10, 0.60);
    s.x = o.x + uniform(rng, -0.04, 0.04);
    s.y = o.y + uniform(rng, 0.08, 0.14);
  }
}

template <std::size_t N>
int index_of(const std::array<std::string_view, N>& table, std::string_view word) {
  for (std::size_t i = 0; i < N; ++i)
    if (table[i] == word) return static_cast<int>(i);
  throw ContractError("scene generator: unknown word " + std::string(word));
}

enum class Style { kFull, kColor, kSize };

void describe(TokenSequence& out, const SceneObject& o, Style style) {
  out.emplace_back("a");
  if (style != Style::kColor) out.push_back(o.size);
  if (style != Style::kSize) out.push_back(o.color);
  out.push_back(o.noun);
}

void append_phrase(TokenSequence& out, std::string_view phrase) {
  for (auto& t : metrics::tokenize(phrase)) out.push_back(std::move(t));
}

TokenSequence caption_for(const SceneDescription& scene, const SceneRelation& rel, Style style, bool inverse, bool existential) {
  TokenSequence out;
  if (existential) {
    out.emplace_back("there");
    out.emplace_back("is");
  }
  const auto& s = scene.objects[static_cast<std::size_t>(rel.subject)];
  const auto& o = scene.objects[static_cast<std::size_t>(rel.object)];
  describe(out, inverse ? o : s, style);
  append_phrase(out, inverse ? inverse_relation(rel.relation) : std::string_view(rel.relation));
  describe(out, inverse ? s : o, style);
  if (out.size() > kMaxCaptionTokens) out.resize(kMaxCaptionTokens);
  return out;
}

}  // namespace

void GrammarConfig::validate() const {
  if (feature_dim < layout::kMinDim) throw ContractError("grammar: feature_dim must be >= " + std::to_string(layout::kMinDim));
  if (noise < 0.0) throw ContractError("grammar: noise must be >= 0");
  if (min_objects < 2 || max_objects < min_objects) throw ContractError("grammar: need 2 <= min_objects <= max_objects");
  if (regions < (deterministic ? 2 : max_objects)) throw ContractError("grammar: not enough regions for the objects");
  if (min_references < 1 || max_references < min_references) throw ContractError("grammar: need 1 <= min_references <= max_references");
}

std::optional<std::string> geometric_relation(const SceneObject& a, const SceneObject& b) {
  const double dx = b.x - a.x;
  const double dy = a.y - b.y;
  if (std::abs(dx) <= 0.08 && dy >= 0.06 && dy <= 0.18) return "riding";
  if (std::abs(dx) <= 0.25 && dy >= 0.40) return "above";
  if (dx >= 0.40 && std::abs(dy) <= 0.25) return "left of";
  return std::nullopt;
}

std::string_view inverse_relation(std::string_view relation) {
  if (relation == "left of") return "right of";
  if (relation == "above") return "below";
  if (relation == "riding") return "carrying";
  throw ContractError("unknown relation '" + std::string(relation) + "'");
}

Lexicon grammar_lexicon() {
  Lexicon lex;
  for (auto n : kNouns) lex.add(std::string(n), LexCategory::kObject);
  for (auto c : kColors) lex.add(std::string(c), LexCategory::kAttribute);
  for (auto s : kSizes) lex.add(std::string(s), LexCategory::kAttribute);
  for (auto w : {"left", "right", "of", "above", "below", "riding", "carrying"}) lex.add(w, LexCategory::kRelation);
  for (auto w : {"a", "there", "is"}) lex.add(w, LexCategory::kFunction);
  return lex;
}

Dataset generate_scenes(std::size_t count, std::uint64_t seed, const GrammarConfig& config) {
  config.validate();
  Dataset ds;
  ds.info = {seed, config.deterministic, config.regions, config.feature_dim};
  ds.lexicon = grammar_lexicon();
  const auto k = static_cast<std::size_t>(config.regions);
  const auto d = static_cast<std::size_t>(config.feature_dim);

  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(mix_seed(seed, i));
    SceneDescription scene;
    scene.image_id = i;

    const int n_objects = config.deterministic ? 2 : pick_int(rng, config.min_objects, config.max_objects);
    const std::string anchor(kRelations[pick(rng, kRelations.size())]);
    for (int j = 0; j < n_objects; ++j) scene.objects.push_back(random_object(rng));
    place_pair(rng, anchor, scene.objects[0], scene.objects[1]);
    for (std::size_t j = 2; j < scene.objects.size(); ++j) {
      scene.objects[j].x = uniform(rng, 0.05, 0.95);
      scene.objects[j].y = uniform(rng, 0.05, 0.95);
    }

    if (config.deterministic) {
      scene.relations.push_back({0, 1, anchor});
    } else {
      for (int a = 0; a < n_objects; ++a)
        for (int b = 0; b < n_objects; ++b) {
          if (a == b) continue;
          if (auto r = geometric_relation(scene.objects[static_cast<std::size_t>(a)], scene.objects[static_cast<std::size_t>(b)])) {
            scene.relations.push_back({a, b, *r});
          }
        }
    }

    // Random slot for every object; remaining slots are distractors.
    std::vector<int> slots(k);
    for (std::size_t s = 0; s < k; ++s) slots[s] = static_cast<int>(s);
    for (std::size_t s = k - 1; s > 0; --s) std::swap(slots[s], slots[pick(rng, s + 1)]);
    for (std::size_t j = 0; j < scene.objects.size(); ++j) scene.objects[j].region = slots[j];

    std::vector<float> values(k * d, 0.0f);
    std::vector<bool> occupied(k, false);
    for (const auto& o : scene.objects) {
      float* row = values.data() + static_cast<std::size_t>(o.region) * d;
      occupied[static_cast<std::size_t>(o.region)] = true;
      row[layout::kNoun + index_of(kNouns, o.noun)] = 1.0f;
      row[layout::kColor + index_of(kColors, o.color)] = 1.0f;
      row[layout::kSize + index_of(kSizes, o.size)] = 1.0f;
      row[layout::kX] = static_cast<float>(o.x);
      row[layout::kY] = static_cast<float>(o.y);
      row[layout::kObjectness] = 1.0f;
    }
    for (std::size_t r = 0; r < k; ++r) {
      float* row = values.data() + r * d;
      if (!occupied[r]) {
        row[layout::kX] = static_cast<float>(uniform(rng, 0.0, 1.0));
        row[layout::kY] = static_cast<float>(uniform(rng, 0.0, 1.0));
      }
      for (std::size_t c = layout::kMinDim; c < d; ++c) row[c] = static_cast<float>(uniform(rng, 0.0, 0.5));
      for (std::size_t c = 0; c < d; ++c) row[c] += static_cast<float>(config.noise * gaussian(rng));
    }

    CaptionRecord caps;
    caps.image_id = scene.image_id;
    if (config.deterministic) {
      caps.references.push_back(caption_for(scene, scene.relations.front(), Style::kFull, false, false));
    } else {
      const int n_refs = pick_int(rng, config.min_references, config.max_references);
      for (int r = 0; r < n_refs; ++r) {
        const auto& rel = scene.relations[pick(rng, scene.relations.size())];
        const auto style = static_cast<Style>(pick(rng, 3));
        const bool inverse = uniform01(rng) < 0.3;
        const bool existential = uniform01(rng) < 0.2;
        caps.references.push_back(caption_for(scene, rel, style, inverse, existential));
      }
    }

    ds.features.push_back({scene.image_id, RegionFeatureSet(config.regions, config.feature_dim, std::move(values))});
    ds.captions.push_back(std::move(caps));
    ds.scenes.push_back(std::move(scene));
  }
  return ds;
}

namespace {

struct Mention {
  TokenSequence subject;
  std::string phrase;
  TokenSequence object;
};

bool is_relation_word(const std::string& w) {
  return w == "left" || w == "right" || w == "above" || w == "below" || w == "riding" || w == "carrying";
}

std::optional<Mention> parse_mention(const TokenSequence& caption) {
  std::size_t i = 0;
  if (caption.size() >= 2 && caption[0] == "there" && caption[1] == "is") i = 2;
  Mention m;
  if (i >= caption.size() || caption[i] != "a") return std::nullopt;
  for (++i; i < caption.size() && !is_relation_word(caption[i]); ++i) m.subject.push_back(caption[i]);
  if (i >= caption.size()) return std::nullopt;
  m.phrase = caption[i++];
  if (m.phrase == "left" || m.phrase == "right") {
    if (i >= caption.size() || caption[i] != "of") return std::nullopt;
    m.phrase += " of";
    ++i;
  }
  if (i >= caption.size() || caption[i] != "a") return std::nullopt;
  for (++i; i < caption.size(); ++i) m.object.push_back(caption[i]);
  if (m.subject.empty() || m.object.empty()) return std::nullopt;
  return m;
}

bool matches(const SceneObject& o, const TokenSequence& desc) {
  if (desc.back() != o.noun) return false;
  for (std::size_t i = 0; i + 1 < desc.size(); ++i)
    if (desc[i] != o.color && desc[i] != o.size) return false;
  return true;
}

}  // namespace

AuditReport audit_relations(const Dataset& dataset) {
  AuditReport report;
  if (dataset.scenes.size() != dataset.captions.size()) throw DataError("audit: dataset has no scene descriptions");
  for (std::size_t i = 0; i < dataset.scenes.size(); ++i) {
    const auto& scene = dataset.scenes[i];
    for (const auto& ref : dataset.captions[i].references) {
      ++report.relation_mentions;
      auto m = parse_mention(ref);
      if (!m) {
        report.findings.push_back({scene.image_id, metrics::join(ref), "no subject-relation-object structure"});
        continue;
      }
      std::string relation = m->phrase;
      const TokenSequence* subj = &m->subject;
      const TokenSequence* obj = &m->object;
      bool known = false;
      for (auto r : kRelations) {
        if (relation == r) known = true;
        if (relation == inverse_relation(r)) {
          relation = std::string(r);
          std::swap(subj, obj);
          known = true;
        }
      }
      bool backed = false;
      if (known) {
        for (const auto& rel : scene.relations) {
          if (rel.relation == relation && matches(scene.objects[static_cast<std::size_t>(rel.subject)], *subj) &&
              matches(scene.objects[static_cast<std::size_t>(rel.object)], *obj)) {
            backed = true;
            break;
          }
        }
      }
      if (backed) {
        ++report.backed;
      } else {
        report.findings.push_back({scene.image_id, metrics::join(ref), "relation '" + m->phrase + "' not in scene graph"});
      }
    }
  }
  return report;
}

}  // namespace cavp::data
