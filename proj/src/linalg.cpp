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

#include "capf/linalg.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "capf/error.hpp"
#include "weights_check.hpp"

namespace capf {

namespace {

bool try_llt(const Matrix& m, Matrix& out) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    return false;
  }
  out = llt.matrixL();
  // Eigen only rejects non-positive pivots; NaN pivots slip through.
  return out.allFinite() && (out.diagonal().array() > 0.0).all();
}

}  // namespace

bool is_symmetric(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols()) {
    return false;
  }
  if (m.size() == 0) {
    return true;
  }
  const double scale = m.cwiseAbs().maxCoeff();
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

void symmetrize(Matrix& m) {
  const auto n = m.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = j + 1; k < n; ++k) {
      const double avg = 0.5 * (m(j, k) + m(k, j));
      m(j, k) = avg;
      m(k, j) = avg;
    }
  }
}

Matrix cholesky(const Matrix& m) {
  if (!is_symmetric(m)) {
    throw std::invalid_argument("cholesky: matrix is not square and symmetric");
  }
  if (!m.allFinite()) {
    throw NotPositiveDefinite("cholesky: matrix has non-finite entries");
  }
  Matrix factor;
  if (try_llt(m, factor)) {
    return factor;
  }
  const auto d = static_cast<double>(m.rows());
  const double jitter = kCholeskyJitter * m.trace() / d;
  if (jitter > 0.0) {
    Matrix jittered = m;
    jittered.diagonal().array() += jitter;
    if (try_llt(jittered, factor)) {
      return factor;
    }
  }
  throw NotPositiveDefinite("cholesky: matrix is not positive definite (jitter retry failed)");
}

GaussianParams::GaussianParams(Vector mean, Matrix cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
  if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size()) {
    throw std::invalid_argument("GaussianParams: covariance is " + std::to_string(cov_.rows()) + "x" +
                                std::to_string(cov_.cols()) + " but mean has dimension " +
                                std::to_string(mean_.size()));
  }
  if (!mean_.allFinite()) {
    throw std::invalid_argument("GaussianParams: mean has non-finite entries");
  }
  if (cov_.isZero(0.0)) {
    point_mass_ = true;
    chol_ = Matrix::Zero(cov_.rows(), cov_.cols());
    return;
  }
  chol_ = cholesky(cov_);
  log_det_ = 2.0 * chol_.diagonal().array().log().sum();
}

double GaussianParams::log_det() const {
  if (point_mass_) {
    throw NotPositiveDefinite("GaussianParams: zero covariance has no density");
  }
  return log_det_;
}

double GaussianParams::log_density_of_residual(const Eigen::Ref<const Vector>& residual) const {
  if (point_mass_) {
    throw NotPositiveDefinite("GaussianParams: zero covariance has no density");
  }
  const Vector z = chol_.triangularView<Eigen::Lower>().solve(residual);
  const auto d = static_cast<double>(dim());
  return -0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det_ + z.squaredNorm());
}

Vector mvn_draw(const GaussianParams& g, RandomStream& rng) {
  Vector z(g.mean().size());
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    z[j] = rng.normal();
  }
  if (g.is_point_mass()) {
    return g.mean();
  }
  return g.mean() + g.chol().triangularView<Eigen::Lower>() * z;
}

std::vector<Vector> mvn_sample(const GaussianParams& g, std::size_t n, RandomStream& rng) {
  std::vector<Vector> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(mvn_draw(g, rng));
  }
  return out;
}

double mvn_logpdf(const GaussianParams& g, const Eigen::Ref<const Vector>& x) {
  if (x.size() != g.mean().size()) {
    throw std::invalid_argument("mvn_logpdf: dimension mismatch");
  }
  return g.log_density_of_residual(x - g.mean());
}

MeanCov weighted_mean_cov(const Matrix& points, std::span<const double> weights) {
  const double sum_sq = detail::check_normalized_weights(points, weights);
  const auto n = points.rows();
  const auto d = points.cols();

  MeanCov out{Vector::Zero(d), Matrix::Zero(d, d)};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      out.mean[j] += weights[static_cast<std::size_t>(i)] * points(i, j);
    }
  }
  // Textbook accumulation over particles; only the upper triangle is summed and
  // then mirrored, which makes the result exactly symmetric.
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = weights[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < d; ++j) {
      const double dj = points(i, j) - out.mean[j];
      for (Eigen::Index k = j; k < d; ++k) {
        out.cov(j, k) += w * dj * (points(i, k) - out.mean[k]);
      }
    }
  }
  const double scale = 1.0 / (1.0 - sum_sq);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index k = j; k < d; ++k) {
      out.cov(j, k) *= scale;
      out.cov(k, j) = out.cov(j, k);
    }
  }
  return out;
}

}  // namespace capf
