// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

namespace cavp {

/// k region vectors of dimension D (row-major k x D) plus their mean pool.
class RegionFeatureSet {
 public:
  RegionFeatureSet() = default;
  /// Throws DataError on k == 0, size mismatch or non-finite values.
  RegionFeatureSet(int regions, int dim, std::vector<float> values);

  int regions() const { return regions_; }
  int dim() const { return dim_; }
  std::span<const float> values() const { return values_; }
  std::span<const float> region(int i) const;
  std::span<const float> mean() const { return mean_; }

  /// Recomputes the mean pool and compares with the stored one.
  bool mean_consistent(double tol = 1e-6) const;

 private:
  int regions_ = 0;
  int dim_ = 0;
  std::vector<float> values_;
  std::vector<float> mean_;
};

}  // namespace cavp
