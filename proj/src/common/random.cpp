// SPDX-License-Identifier: Apache-2.0
#include "cavp/common/random.hpp"

#include <numeric>
#include <sstream>

#include "cavp/common/errors.hpp"

namespace cavp {

std::size_t sample_categorical(std::span<const double> probs, Rng& rng) {
  if (probs.empty()) throw ContractError("sample_categorical: empty distribution");
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  if (!(total > 0.0)) throw ContractError("sample_categorical: distribution has no mass");
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  // Rounding can leave u just above the accumulated mass; return the last
  // index with non-zero weight.
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return i;
  }
  return probs.size() - 1;
}

std::string serialize_rng(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

Rng deserialize_rng(const std::string& state) {
  Rng rng;
  std::istringstream is(state);
  is >> rng;
  if (is.fail()) throw DataError("invalid RNG state string");
  return rng;
}

}  // namespace cavp
