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

#include <exception>
#include <mutex>
#include <stdexcept>

#ifdef CAPF_HAVE_OPENMP
#include <omp.h>
#endif

#include "kernel_bodies.hpp"
#include "weights_check.hpp"

namespace capf::kernels {

namespace {

/// Runs body(i) for i in [0, n) across threads. The first exception thrown by
/// any iteration is rethrown on the calling thread after the loop.
template <class Body>
void parallel_for(Eigen::Index n, Body&& body) {
  std::exception_ptr failure;
  std::mutex failure_mutex;
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      const std::lock_guard lock(failure_mutex);
      if (!failure) {
        failure = std::current_exception();
      }
    }
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
}

}  // namespace

int max_threads() noexcept {
#ifdef CAPF_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace omp {

void sample_prior(const GaussianParams& prior, Matrix& out, const StreamKeys& keys) {
  parallel_for(out.rows(), [&](Eigen::Index i) { body::sample_prior(prior, out, keys, i); });
}

void propagate(const Model& model, const Matrix& in, Matrix& out, const StreamKeys& keys, std::size_t t) {
  out.resize(in.rows(), in.cols());
  parallel_for(in.rows(), [&](Eigen::Index i) { body::propagate(model, in, out, keys, t, i); });
}

void apply_mean_dynamics(const Model& model, const Matrix& in, Matrix& out) {
  out.resize(in.rows(), in.cols());
  parallel_for(in.rows(), [&](Eigen::Index i) { body::mean_dynamics(model, in, out, i); });
}

void observation_log_likelihood(const Matrix& observation, const Vector& y, const GaussianParams& noise,
                                const Matrix& points, std::span<double> out) {
  parallel_for(points.rows(), [&](Eigen::Index i) {
    out[static_cast<std::size_t>(i)] = body::log_likelihood(observation, y, noise, points, i);
  });
}

void conjugate_move(const Matrix& points, const Matrix& observation, const Vector& y, const Matrix& gain,
                    const GaussianParams& move, Matrix& out, const StreamKeys& keys, std::size_t t) {
  out.resize(points.rows(), points.cols());
  parallel_for(points.rows(),
               [&](Eigen::Index i) { body::conjugate_move(points, observation, y, gain, move, out, keys, t, i); });
}

// The reductions parallelize over output coordinates and keep the particle
// sum serial and in index order, so the bits match the reference backend.

Vector weighted_mean(const Matrix& points, std::span<const double> weights) {
  if (weights.size() != static_cast<std::size_t>(points.rows())) {
    throw std::invalid_argument("weighted_mean: weight count does not match point count");
  }
  Vector mean(points.cols());
  parallel_for(points.cols(), [&](Eigen::Index j) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      acc += weights[static_cast<std::size_t>(i)] * points(i, j);
    }
    mean[j] = acc;
  });
  return mean;
}

MeanCov weighted_mean_cov(const Matrix& points, std::span<const double> weights) {
  const double sum_sq = detail::check_normalized_weights(points, weights);
  const auto n = points.rows();
  const auto d = points.cols();
  MeanCov out{weighted_mean(points, weights), Matrix::Zero(d, d)};
  const double scale = 1.0 / (1.0 - sum_sq);
  parallel_for(d, [&](Eigen::Index j) {
    for (Eigen::Index k = j; k < d; ++k) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += weights[static_cast<std::size_t>(i)] * (points(i, j) - out.mean[j]) * (points(i, k) - out.mean[k]);
      }
      out.cov(j, k) = acc * scale;
    }
  });
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index k = j + 1; k < d; ++k) {
      out.cov(k, j) = out.cov(j, k);
    }
  }
  return out;
}

}  // namespace omp

}  // namespace capf::kernels
