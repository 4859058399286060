// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>

namespace cavp {

/// Ablation topologies. Single runs only the single sub-policy; the "p"
/// variants replace the context sub-policy by the previous output; cavp3p
/// gives the output sub-policy its own LSTM.
enum class Variant { kSingle, kCavp3p, kCavp4p, kCavp4c };

std::string_view variant_name(Variant v);
/// Throws ContractError listing the valid names.
Variant parse_variant(std::string_view name);
inline constexpr std::array<std::string_view, 4> kVariantNames = {"single", "cavp3p", "cavp4p", "cavp4c"};

enum class SubPolicy { kSingle = 0, kContext = 1, kComposition = 2, kOutput = 3 };
inline constexpr int kSubPolicyCount = 4;
std::string_view sub_policy_name(SubPolicy sp);

struct ModelConfig {
  int feature_dim = 24;  // D
  int regions = 8;       // k
  int hidden = 64;       // every LSTM
  int embed = 48;        // E
  int attention = 64;    // additive attention width
  int vocab_size = 0;
  int max_length = 16;  // words per generated caption
  Variant variant = Variant::kCavp4c;

  int state_size() const { return hidden + feature_dim + embed; }

  /// Desk-scale defaults (vocab filled in from data).
  static ModelConfig desk();
  /// The published large configuration. Not runnable on a desk machine.
  static ModelConfig paper();
  /// Tiny model used by gradient checks: hidden 8, vocab 12, k = 4, T = 3.
  static ModelConfig miniature();

  void validate() const;
};

/// Sub-policy -> LSTM parameter prefix. Sub-policies mapped to the same
/// prefix share LSTM weights; attention weights are never shared.
using SharingMap = std::map<std::string, std::string>;

SharingMap sharing_map_for(Variant v);

/// Number of distinct LSTM parameter sets referenced by a sharing map.
int distinct_lstm_sets(const SharingMap& m);

}  // namespace cavp
