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

// Serial reference backend. Kept deliberately plain: it is the oracle the
// OpenMP backend is tested against.

#include <stdexcept>

#include "kernel_bodies.hpp"

namespace capf::kernels::reference {

void sample_prior(const GaussianParams& prior, Matrix& out, const StreamKeys& keys) {
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    body::sample_prior(prior, out, keys, i);
  }
}

void propagate(const Model& model, const Matrix& in, Matrix& out, const StreamKeys& keys, std::size_t t) {
  out.resize(in.rows(), in.cols());
  for (Eigen::Index i = 0; i < in.rows(); ++i) {
    body::propagate(model, in, out, keys, t, i);
  }
}

void apply_mean_dynamics(const Model& model, const Matrix& in, Matrix& out) {
  out.resize(in.rows(), in.cols());
  for (Eigen::Index i = 0; i < in.rows(); ++i) {
    body::mean_dynamics(model, in, out, i);
  }
}

void observation_log_likelihood(const Matrix& observation, const Vector& y, const GaussianParams& noise,
                                const Matrix& points, std::span<double> out) {
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = body::log_likelihood(observation, y, noise, points, i);
  }
}

void conjugate_move(const Matrix& points, const Matrix& observation, const Vector& y, const Matrix& gain,
                    const GaussianParams& move, Matrix& out, const StreamKeys& keys, std::size_t t) {
  out.resize(points.rows(), points.cols());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    body::conjugate_move(points, observation, y, gain, move, out, keys, t, i);
  }
}

Vector weighted_mean(const Matrix& points, std::span<const double> weights) {
  if (weights.size() != static_cast<std::size_t>(points.rows())) {
    throw std::invalid_argument("weighted_mean: weight count does not match point count");
  }
  Vector mean = Vector::Zero(points.cols());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
      mean[j] += weights[static_cast<std::size_t>(i)] * points(i, j);
    }
  }
  return mean;
}

MeanCov weighted_mean_cov(const Matrix& points, std::span<const double> weights) {
  return capf::weighted_mean_cov(points, weights);
}

}  // namespace capf::kernels::reference
