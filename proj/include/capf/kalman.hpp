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

#ifndef CAPF_KALMAN_HPP
#define CAPF_KALMAN_HPP

#include <span>
#include <vector>

#include "capf/linalg.hpp"
#include "capf/models.hpp"

namespace capf {

/// Filtered moments for t = 1..T and the exact marginal log-likelihood.
struct KalmanOutput {
  std::vector<Vector> means;
  std::vector<Matrix> covs;
  double log_z = 0.0;
};

/// Exact Kalman filter for a linear-Gaussian model.
///
/// Starts from spec.init() as the law of x_0 and predicts before the first
/// update. The covariance update uses the Joseph form followed by explicit
/// symmetrization.
///
/// \throws NotPositiveDefinite if an innovation covariance cannot be factorized.
[[nodiscard]] KalmanOutput kalman_filter(const LgssmSpec& spec, std::span<const Vector> observations);

/// Kalman filter for the model with an extra artificial-noise stage
/// x'_t = A x_{t-1} + v_t, x_t = x'_t + eps xi_t, xi_t ~ N(0, S).
///
/// For linear dynamics the two stages compose into one with process
/// covariance Q + eps^2 S. At eps = 0 the result equals kalman_filter exactly.
[[nodiscard]] KalmanOutput kalman_filter_augmented(const LgssmSpec& spec, double eps, const Matrix& shape,
                                                   std::span<const Vector> observations);

}  // namespace capf

#endif  // CAPF_KALMAN_HPP
