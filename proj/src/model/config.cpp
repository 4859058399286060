// SPDX-License-Identifier: Apache-2.0
#include "cavp/model/config.hpp"

#include <set>

#include "cavp/common/errors.hpp"

namespace cavp {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kSingle: return "single";
    case Variant::kCavp3p: return "cavp3p";
    case Variant::kCavp4p: return "cavp4p";
    case Variant::kCavp4c: return "cavp4c";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  if (name == "single") return Variant::kSingle;
  if (name == "cavp3p") return Variant::kCavp3p;
  if (name == "cavp4p") return Variant::kCavp4p;
  if (name == "cavp4c") return Variant::kCavp4c;
  throw ContractError("unknown variant '" + std::string(name) + "' (choices: single, cavp3p, cavp4p, cavp4c)");
}

std::string_view sub_policy_name(SubPolicy sp) {
  switch (sp) {
    case SubPolicy::kSingle: return "single";
    case SubPolicy::kContext: return "context";
    case SubPolicy::kComposition: return "composition";
    case SubPolicy::kOutput: return "output";
  }
  return "unknown";
}

ModelConfig ModelConfig::desk() { return ModelConfig{}; }

ModelConfig ModelConfig::paper() {
  ModelConfig c;
  c.feature_dim = 2048;
  c.regions = 36;
  c.hidden = 1300;
  c.embed = 1000;
  c.attention = 1024;
  c.vocab_size = 10369;
  return c;
}

ModelConfig ModelConfig::miniature() {
  ModelConfig c;
  c.feature_dim = 6;
  c.regions = 4;
  c.hidden = 8;
  c.embed = 5;
  c.attention = 7;
  c.vocab_size = 12;
  c.max_length = 3;
  return c;
}

void ModelConfig::validate() const {
  auto positive = [](int v, const char* what) {
    if (v <= 0) throw ContractError(std::string("model config: ") + what + " must be positive, got " + std::to_string(v));
  };
  positive(feature_dim, "feature_dim");
  positive(regions, "regions");
  positive(hidden, "hidden");
  positive(embed, "embed");
  positive(attention, "attention");
  positive(max_length, "max_length");
  if (vocab_size < 5) throw ContractError("model config: vocab_size must cover the 4 special tokens plus at least one word");
}

SharingMap sharing_map_for(Variant v) {
  switch (v) {
    case Variant::kSingle:
      return {{"single", "lstm.single"}};
    case Variant::kCavp3p:
      return {{"single", "lstm.shared"}, {"context", "lstm.shared"}, {"composition", "lstm.shared"}, {"output", "lstm.output"}};
    case Variant::kCavp4p:
    case Variant::kCavp4c:
      return {{"single", "lstm.shared"}, {"context", "lstm.shared"}, {"composition", "lstm.shared"}, {"output", "lstm.shared"}};
  }
  return {};
}

int distinct_lstm_sets(const SharingMap& m) {
  std::set<std::string> prefixes;
  for (const auto& [sp, prefix] : m) prefixes.insert(prefix);
  return static_cast<int>(prefixes.size());
}

}  // namespace cavp
