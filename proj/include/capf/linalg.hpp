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

#ifndef CAPF_LINALG_HPP
#define CAPF_LINALG_HPP

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "capf/random.hpp"

/**
 * \file
 * \brief Dense linear algebra and Gaussian primitives for small state dimensions.
 *
 * Storage is dense and row-major; particle ensembles are N x d matrices with
 * one particle per row. Nothing here exploits sparsity; the target is d <= ~100.
 */

namespace capf {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Relative diagonal jitter added on the single factorization retry.
inline constexpr double kCholeskyJitter = 1e-10;

/// True when `m` is square and |m - m^T| <= rel_tol * max|m| entrywise.
[[nodiscard]] bool is_symmetric(const Matrix& m, double rel_tol = 1e-10);

/// Replaces `m` by (m + m^T) / 2, exactly symmetric afterwards.
void symmetrize(Matrix& m);

/// Lower Cholesky factor L with L L^T = m.
///
/// On a failed pivot the factorization is retried once with
/// kCholeskyJitter * trace(m) / d added to the diagonal.
///
/// \throws NotPositiveDefinite when the retry fails as well.
/// \throws std::invalid_argument when `m` is not square and symmetric.
[[nodiscard]] Matrix cholesky(const Matrix& m);

/// Multivariate normal N(mean, cov) with its factor computed at construction.
///
/// An all-zero covariance is a legal point mass: its factor is the zero
/// matrix and sampling returns the mean. It has no density.
class GaussianParams {
 public:
  GaussianParams(Vector mean, Matrix cov);

  [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(mean_.size()); }
  [[nodiscard]] const Vector& mean() const noexcept { return mean_; }
  [[nodiscard]] const Matrix& cov() const noexcept { return cov_; }
  [[nodiscard]] const Matrix& chol() const noexcept { return chol_; }
  [[nodiscard]] bool is_point_mass() const noexcept { return point_mass_; }

  /// log det(cov); throws NotPositiveDefinite for a point mass.
  [[nodiscard]] double log_det() const;

  /// log N(mean + residual | mean, cov), through one triangular solve.
  [[nodiscard]] double log_density_of_residual(const Eigen::Ref<const Vector>& residual) const;

 private:
  Vector mean_;
  Matrix cov_;
  Matrix chol_;
  double log_det_ = 0.0;
  bool point_mass_ = false;
};

/// One draw mean + chol * z, z ~ N(0, I), consuming dim() normals.
[[nodiscard]] Vector mvn_draw(const GaussianParams& g, RandomStream& rng);

/// `n` successive draws from `g`.
[[nodiscard]] std::vector<Vector> mvn_sample(const GaussianParams& g, std::size_t n, RandomStream& rng);

/// log N(x | mean, cov) = -(d log 2pi + log det cov + r^T cov^-1 r) / 2.
[[nodiscard]] double mvn_logpdf(const GaussianParams& g, const Eigen::Ref<const Vector>& x);

struct MeanCov {
  Vector mean;
  Matrix cov;
};

/// Weighted mean and bias-corrected weighted covariance of the rows of `points`.
///
/// cov_jk = (1 - sum w^2)^-1 sum_i w_i (x_ij - mu_j)(x_ik - mu_k). The result is
/// symmetric to the bit.
///
/// \throws DegenerateWeights when sum w^2 >= 1 - 1e-12.
/// \throws std::invalid_argument on size mismatch, N < 2, or weights not summing to one.
[[nodiscard]] MeanCov weighted_mean_cov(const Matrix& points, std::span<const double> weights);

}  // namespace capf

#endif  // CAPF_LINALG_HPP
