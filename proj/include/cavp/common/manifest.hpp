// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace cavp {

/// Everything needed to reproduce a command: resolved configuration, seed,
/// code version, SHA-256 of every input file and the output paths. Contains
/// no timestamps so identical runs write identical manifests.
struct RunManifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::string version;
  std::map<std::string, std::string> inputs;   // path -> sha256
  std::vector<std::string> outputs;
  std::map<std::string, std::string> output_digests;

  /// Digests a file, or every regular file under a directory.
  void add_input(const std::filesystem::path& path);
  void digest_outputs();

  nlohmann::json to_json() const;
  void write(const std::filesystem::path& path) const;
};

}  // namespace cavp
