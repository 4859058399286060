// SPDX-License-Identifier: Apache-2.0
#include "cavp/common/logging.hpp"

#include <cstdlib>

namespace cavp {

void configure_logging_from_env() {
  const char* env = std::getenv("CAVP_LOG_LEVEL");
  auto level = spdlog::level::warn;
  if (env != nullptr && *env != '\0') level = spdlog::level::from_str(env);
  spdlog::set_level(level);
  spdlog::set_pattern("[%H:%M:%S] [%^%l%$] %v");
}

}  // namespace cavp
