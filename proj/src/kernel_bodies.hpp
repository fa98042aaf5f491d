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

#ifndef CAPF_SRC_KERNEL_BODIES_HPP
#define CAPF_SRC_KERNEL_BODIES_HPP

#include <span>

#include "capf/kernels.hpp"

// Per-particle bodies shared by both backends, and the two backend entry points.

namespace capf::kernels {

namespace body {

inline void sample_prior(const GaussianParams& prior, Matrix& out, const StreamKeys& keys, Eigen::Index i) {
  auto rng = keys.at(Stage::Init, 0, static_cast<std::size_t>(i));
  out.row(i) = mvn_draw(prior, rng).transpose();
}

inline void propagate(const Model& model, const Matrix& in, Matrix& out, const StreamKeys& keys, std::size_t t,
                      Eigen::Index i) {
  auto rng = keys.at(Stage::Propagate, t, static_cast<std::size_t>(i));
  Vector next(in.cols());
  propagate(model, in.row(i).transpose(), next, rng);
  out.row(i) = next.transpose();
}

inline void mean_dynamics(const Model& model, const Matrix& in, Matrix& out, Eigen::Index i) {
  out.row(i) = capf::mean_dynamics(model, in.row(i).transpose()).transpose();
}

inline double log_likelihood(const Matrix& observation, const Vector& y, const GaussianParams& noise,
                             const Matrix& points, Eigen::Index i) {
  const Vector residual = y - observation * points.row(i).transpose();
  return noise.log_density_of_residual(residual);
}

inline void conjugate_move(const Matrix& points, const Matrix& observation, const Vector& y, const Matrix& gain,
                           const GaussianParams& move, Matrix& out, const StreamKeys& keys, std::size_t t,
                           Eigen::Index i) {
  auto rng = keys.at(Stage::Proposal, t, static_cast<std::size_t>(i));
  const Vector x = points.row(i).transpose();
  const Vector residual = y - observation * x;
  const Vector mean = x + gain * residual;
  // The move covariance is shared by all particles; only its factor is used here.
  Vector z(x.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    z[j] = rng.normal();
  }
  out.row(i) = (mean + move.chol().triangularView<Eigen::Lower>() * z).transpose();
}

}  // namespace body

namespace reference {
void sample_prior(const GaussianParams& prior, Matrix& out, const StreamKeys& keys);
void propagate(const Model& model, const Matrix& in, Matrix& out, const StreamKeys& keys, std::size_t t);
void apply_mean_dynamics(const Model& model, const Matrix& in, Matrix& out);
void observation_log_likelihood(const Matrix& observation, const Vector& y, const GaussianParams& noise,
                                const Matrix& points, std::span<double> out);
void conjugate_move(const Matrix& points, const Matrix& observation, const Vector& y, const Matrix& gain,
                    const GaussianParams& move, Matrix& out, const StreamKeys& keys, std::size_t t);
Vector weighted_mean(const Matrix& points, std::span<const double> weights);
MeanCov weighted_mean_cov(const Matrix& points, std::span<const double> weights);
}  // namespace reference

namespace omp {
void sample_prior(const GaussianParams& prior, Matrix& out, const StreamKeys& keys);
void propagate(const Model& model, const Matrix& in, Matrix& out, const StreamKeys& keys, std::size_t t);
void apply_mean_dynamics(const Model& model, const Matrix& in, Matrix& out);
void observation_log_likelihood(const Matrix& observation, const Vector& y, const GaussianParams& noise,
                                const Matrix& points, std::span<double> out);
void conjugate_move(const Matrix& points, const Matrix& observation, const Vector& y, const Matrix& gain,
                    const GaussianParams& move, Matrix& out, const StreamKeys& keys, std::size_t t);
Vector weighted_mean(const Matrix& points, std::span<const double> weights);
MeanCov weighted_mean_cov(const Matrix& points, std::span<const double> weights);
}  // namespace omp

}  // namespace capf::kernels

#endif  // CAPF_SRC_KERNEL_BODIES_HPP
