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

#include <stdexcept>

#include "kernel_bodies.hpp"

namespace capf::kernels {

void sample_prior(Backend backend, const GaussianParams& prior, Matrix& out, const StreamKeys& keys) {
  if (static_cast<std::size_t>(out.cols()) != prior.dim()) {
    throw std::invalid_argument("sample_prior: output width does not match the prior dimension");
  }
  backend == Backend::OpenMP ? omp::sample_prior(prior, out, keys) : reference::sample_prior(prior, out, keys);
}

void propagate(Backend backend, const Model& model, const Matrix& in, Matrix& out, const StreamKeys& keys,
               std::size_t t) {
  backend == Backend::OpenMP ? omp::propagate(model, in, out, keys, t)
                             : reference::propagate(model, in, out, keys, t);
}

void apply_mean_dynamics(Backend backend, const Model& model, const Matrix& in, Matrix& out) {
  backend == Backend::OpenMP ? omp::apply_mean_dynamics(model, in, out)
                             : reference::apply_mean_dynamics(model, in, out);
}

void observation_log_likelihood(Backend backend, const Matrix& observation, const Vector& y,
                                const GaussianParams& noise, const Matrix& points, std::span<double> out) {
  if (out.size() != static_cast<std::size_t>(points.rows())) {
    throw std::invalid_argument("observation_log_likelihood: output size does not match particle count");
  }
  backend == Backend::OpenMP ? omp::observation_log_likelihood(observation, y, noise, points, out)
                             : reference::observation_log_likelihood(observation, y, noise, points, out);
}

void conjugate_move(Backend backend, const Matrix& points, const Matrix& observation, const Vector& y,
                    const Matrix& gain, const GaussianParams& move, Matrix& out, const StreamKeys& keys,
                    std::size_t t) {
  backend == Backend::OpenMP ? omp::conjugate_move(points, observation, y, gain, move, out, keys, t)
                             : reference::conjugate_move(points, observation, y, gain, move, out, keys, t);
}

Vector weighted_mean(Backend backend, const Matrix& points, std::span<const double> weights) {
  return backend == Backend::OpenMP ? omp::weighted_mean(points, weights) : reference::weighted_mean(points, weights);
}

MeanCov weighted_mean_cov(Backend backend, const Matrix& points, std::span<const double> weights) {
  return backend == Backend::OpenMP ? omp::weighted_mean_cov(points, weights)
                                    : reference::weighted_mean_cov(points, weights);
}

}  // namespace capf::kernels
