// Copyright 2026 The capf Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CAPF_SRC_WEIGHTS_CHECK_HPP
#define CAPF_SRC_WEIGHTS_CHECK_HPP

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>

#include "capf/error.hpp"
#include "capf/linalg.hpp"

namespace capf::detail {

/// Validates weights for a weighted covariance and returns sum w^2.
inline double check_normalized_weights(const Matrix& points, std::span<const double> weights) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (weights.size() != n) {
    throw std::invalid_argument("weighted_mean_cov: weight count does not match point count");
  }
  if (n < 2) {
    throw std::invalid_argument("weighted_mean_cov: need at least two points");
  }
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const double w : weights) {
    if (!(w >= 0.0)) {
      throw std::invalid_argument("weighted_mean_cov: negative or NaN weight");
    }
    sum += w;
    sum_sq += w * w;
  }
  // Rounding in a sum of n terms grows like n * eps.
  const double tol = std::max(1e-12, 4.0 * static_cast<double>(n) * std::numeric_limits<double>::epsilon());
  if (std::abs(sum - 1.0) > tol) {
    throw std::invalid_argument("weighted_mean_cov: weights do not sum to one");
  }
  if (sum_sq >= 1.0 - 1e-12) {
    throw DegenerateWeights("weighted_mean_cov: a single particle carries all the weight");
  }
  return sum_sq;
}

}  // namespace capf::detail

#endif  // CAPF_SRC_WEIGHTS_CHECK_HPP
