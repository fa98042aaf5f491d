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

#include "capf/kalman.hpp"

#include <stdexcept>

namespace capf {

namespace {

KalmanOutput run_kalman(const LgssmSpec& spec, const Matrix& process_cov, std::span<const Vector> observations) {
  const Matrix& a = spec.transition();
  const Matrix& c = spec.observation();
  const Matrix& r = spec.obs_cov();
  const auto d = a.rows();
  const Matrix identity = Matrix::Identity(d, d);

  KalmanOutput out;
  out.means.reserve(observations.size());
  out.covs.reserve(observations.size());

  Vector mean = spec.init().mean();
  Matrix cov = spec.init().cov();
  for (const auto& y : observations) {
    if (y.size() != c.rows()) {
      throw std::invalid_argument("kalman_filter: observation dimension does not match C");
    }
    mean = a * mean;
    cov = a * cov * a.transpose() + process_cov;
    symmetrize(cov);

    Matrix innovation_cov = c * cov * c.transpose() + r;
    symmetrize(innovation_cov);
    const GaussianParams innovation(Vector::Zero(c.rows()), innovation_cov);
    const Vector residual = y - c * mean;
    out.log_z += innovation.log_density_of_residual(residual);

    // K = P C^T S^-1 through the Cholesky factor of S.
    const Matrix pct = cov * c.transpose();
    const Matrix gain =
        innovation.chol().transpose().triangularView<Eigen::Upper>().solve(
            innovation.chol().triangularView<Eigen::Lower>().solve(pct.transpose())).transpose();

    mean += gain * residual;
    const Matrix i_kc = identity - gain * c;
    cov = i_kc * cov * i_kc.transpose() + gain * r * gain.transpose();
    symmetrize(cov);

    out.means.push_back(mean);
    out.covs.push_back(cov);
  }
  return out;
}

}  // namespace

KalmanOutput kalman_filter(const LgssmSpec& spec, std::span<const Vector> observations) {
  return run_kalman(spec, spec.process_cov(), observations);
}

KalmanOutput kalman_filter_augmented(const LgssmSpec& spec, double eps, const Matrix& shape,
                                     std::span<const Vector> observations) {
  if (!(eps >= 0.0)) {
    throw std::invalid_argument("kalman_filter_augmented: eps must be non-negative");
  }
  if (shape.rows() != spec.transition().rows() || !is_symmetric(shape)) {
    throw std::invalid_argument("kalman_filter_augmented: S must be a symmetric d x d matrix");
  }
  if (eps == 0.0) {
    return run_kalman(spec, spec.process_cov(), observations);
  }
  const Matrix process_cov = spec.process_cov() + eps * eps * shape;
  return run_kalman(spec, process_cov, observations);
}

}  // namespace capf
