// SPDX-License-Identifier: Apache-2.0
#include "cavp/model/region_features.hpp"

#include <cmath>
#include <string>

#include "cavp/common/errors.hpp"

namespace cavp {

RegionFeatureSet::RegionFeatureSet(int regions, int dim, std::vector<float> values)
    : regions_(regions), dim_(dim), values_(std::move(values)) {
  if (regions_ < 1) throw DataError("region feature set needs at least one region");
  if (dim_ < 1) throw DataError("region feature dimension must be positive");
  if (values_.size() != static_cast<std::size_t>(regions_) * static_cast<std::size_t>(dim_)) {
    throw DataError("region feature set: " + std::to_string(values_.size()) + " values for " + std::to_string(regions_) + " x " +
                    std::to_string(dim_));
  }
  mean_.assign(static_cast<std::size_t>(dim_), 0.0f);
  for (int i = 0; i < regions_; ++i) {
    for (int j = 0; j < dim_; ++j) {
      const float v = values_[static_cast<std::size_t>(i) * dim_ + j];
      if (!std::isfinite(v)) {
        throw DataError("region feature set: non-finite value at region " + std::to_string(i) + ", dim " + std::to_string(j));
      }
    }
  }
  for (int j = 0; j < dim_; ++j) {
    double acc = 0.0;
    for (int i = 0; i < regions_; ++i) acc += values_[static_cast<std::size_t>(i) * dim_ + j];
    mean_[static_cast<std::size_t>(j)] = static_cast<float>(acc / regions_);
  }
}

std::span<const float> RegionFeatureSet::region(int i) const {
  if (i < 0 || i >= regions_) throw ContractError("region index " + std::to_string(i) + " out of range");
  return std::span<const float>(values_).subspan(static_cast<std::size_t>(i) * dim_, static_cast<std::size_t>(dim_));
}

bool RegionFeatureSet::mean_consistent(double tol) const {
  for (int j = 0; j < dim_; ++j) {
    double acc = 0.0;
    for (int i = 0; i < regions_; ++i) acc += values_[static_cast<std::size_t>(i) * dim_ + j];
    if (std::abs(acc / regions_ - mean_[static_cast<std::size_t>(j)]) > tol) return false;
  }
  return true;
}

}  // namespace cavp
