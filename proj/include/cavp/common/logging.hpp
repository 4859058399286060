// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <spdlog/spdlog.h>

namespace cavp {

/// Reads CAVP_LOG_LEVEL (trace, debug, info, warn, error, off); default warn.
void configure_logging_from_env();

}  // namespace cavp
