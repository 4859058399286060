// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string_view>

namespace cavp::tokens {

inline constexpr int kPad = 0;
inline constexpr int kBos = 1;
inline constexpr int kEos = 2;
inline constexpr int kUnk = 3;
inline constexpr int kSpecialCount = 4;

inline constexpr std::string_view kPadText = "<pad>";
inline constexpr std::string_view kBosText = "<bos>";
inline constexpr std::string_view kEosText = "<eos>";
inline constexpr std::string_view kUnkText = "<unk>";

constexpr bool is_special(int id) { return id >= 0 && id < kSpecialCount; }

}  // namespace cavp::tokens
