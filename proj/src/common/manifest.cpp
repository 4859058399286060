// SPDX-License-Identifier: Apache-2.0
#include "cavp/common/manifest.hpp"

#include <algorithm>
#include <fstream>

#include "cavp/common/digest.hpp"
#include "cavp/common/errors.hpp"

namespace cavp {

void RunManifest::add_input(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(path))
      if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) inputs[f.string()] = sha256_file(f);
  } else {
    inputs[path.string()] = sha256_file(path);
  }
}

void RunManifest::digest_outputs() {
  output_digests.clear();
  for (const auto& o : outputs)
    if (std::filesystem::is_regular_file(o)) output_digests[o] = sha256_file(o);
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j = {{"command", command}, {"config", config}, {"seed", seed}, {"version", version}, {"inputs", inputs}, {"outputs", outputs}};
  if (!output_digests.empty()) j["output_digests"] = output_digests;
  return j;
}

void RunManifest::write(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json().dump(2) << '\n';
}

}  // namespace cavp
