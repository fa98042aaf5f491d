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

#ifndef CAPF_KERNELS_HPP
#define CAPF_KERNELS_HPP

#include <cstddef>
#include <cstdint>
#include <span>

#include "capf/linalg.hpp"
#include "capf/models.hpp"
#include "capf/random.hpp"

/**
 * \file
 * \brief Per-particle kernels of the particle filter, in two backends.
 *
 * Backend::Reference is a plain serial loop kept as the test oracle.
 * Backend::OpenMP distributes the same work over threads. Every particle
 * draws from its own keyed substream and every reduction sums particles in
 * index order, so both backends return identical bits for any thread count.
 *
 * Particles are the rows of an N x d matrix.
 */

namespace capf::kernels {

enum class Backend { Reference, OpenMP };

/// Keys separating the substreams used in one filter step.
enum class Stage : std::uint64_t {
  Init = 1,
  Resample = 2,
  Propagate = 3,
  Proposal = 4,
};

/// Source of keyed substreams for one filter run.
class StreamKeys {
 public:
  explicit StreamKeys(std::uint64_t run_seed) noexcept : seed_(run_seed) {}

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

  [[nodiscard]] RandomStream at(Stage stage, std::size_t t, std::size_t particle) const {
    return RandomStream::substream(seed_, {static_cast<std::uint64_t>(stage), t, particle});
  }

 private:
  std::uint64_t seed_;
};

/// Row i of `out` ~ prior, drawn from stream (Init, 0, i).
void sample_prior(Backend backend, const GaussianParams& prior, Matrix& out, const StreamKeys& keys);

/// Row i of `out` = forward simulation of row i of `in`, drawn from stream (Propagate, t, i).
void propagate(Backend backend, const Model& model, const Matrix& in, Matrix& out, const StreamKeys& keys,
               std::size_t t);

/// Row i of `out` = f(row i of `in`) for an additive-Gaussian model.
void apply_mean_dynamics(Backend backend, const Model& model, const Matrix& in, Matrix& out);

/// out[i] = log N(y | C x_i, cov) where `noise` is N(0, cov).
void observation_log_likelihood(Backend backend, const Matrix& observation, const Vector& y,
                                const GaussianParams& noise, const Matrix& points, std::span<double> out);

/// Row i of `out` = x_i + gain (y - C x_i) + L z_i, with L the factor of
/// `move` (a zero-mean Gaussian) and z_i drawn from stream (Proposal, t, i).
void conjugate_move(Backend backend, const Matrix& points, const Matrix& observation, const Vector& y,
                    const Matrix& gain, const GaussianParams& move, Matrix& out, const StreamKeys& keys,
                    std::size_t t);

/// sum_i w_i x_i.
[[nodiscard]] Vector weighted_mean(Backend backend, const Matrix& points, std::span<const double> weights);

/// Same contract as capf::weighted_mean_cov.
[[nodiscard]] MeanCov weighted_mean_cov(Backend backend, const Matrix& points, std::span<const double> weights);

/// Threads the OpenMP backend will use (1 when built without OpenMP).
[[nodiscard]] int max_threads() noexcept;

}  // namespace capf::kernels

#endif  // CAPF_KERNELS_HPP
