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

#ifndef CAPF_MODELS_HPP
#define CAPF_MODELS_HPP

#include <cstddef>
#include <iosfwd>
#include <variant>
#include <vector>

#include "capf/linalg.hpp"
#include "capf/random.hpp"

/**
 * \file
 * \brief State-space models x_t = f(x_{t-1}, v_t), y_t = C x_t + e_t, e_t ~ N(0, R).
 *
 * Two concrete models: a linear-Gaussian model (f(x, v) = A x + v) and the
 * stochastic Lorenz'96 system integrated with Euler-Maruyama between
 * observations. Both expose forward simulation; only the linear model also
 * exposes its additive-Gaussian structure.
 */

namespace capf {

/// Linear-Gaussian model x_t = A x_{t-1} + v_t, y_t = C x_t + e_t.
class LgssmSpec {
 public:
  /// \throws std::invalid_argument on inconsistent dimensions or non-symmetric Q, R.
  LgssmSpec(Matrix transition, Matrix observation, Matrix process_cov, Matrix obs_cov, GaussianParams init);

  [[nodiscard]] std::size_t state_dim() const noexcept { return static_cast<std::size_t>(transition_.rows()); }
  [[nodiscard]] std::size_t obs_dim() const noexcept { return static_cast<std::size_t>(observation_.rows()); }

  [[nodiscard]] const Matrix& transition() const noexcept { return transition_; }
  [[nodiscard]] const Matrix& observation() const noexcept { return observation_; }
  [[nodiscard]] const Matrix& process_cov() const noexcept { return process_noise_.cov(); }
  [[nodiscard]] const Matrix& obs_cov() const noexcept { return obs_noise_.cov(); }
  [[nodiscard]] const GaussianParams& process_noise() const noexcept { return process_noise_; }
  [[nodiscard]] const GaussianParams& obs_noise() const noexcept { return obs_noise_; }
  [[nodiscard]] const GaussianParams& init() const noexcept { return init_; }

 private:
  Matrix transition_;
  Matrix observation_;
  GaussianParams process_noise_;
  GaussianParams obs_noise_;
  GaussianParams init_;
};

/// Stochastic Lorenz'96 system observed through y_t = C x_t + e_t.
class Lorenz96Spec {
 public:
  struct Dynamics {
    std::size_t dim = 10;
    double forcing = 12.0;
    double diffusion = 0.1;
    double dt_obs = 0.1;
    std::size_t substeps = 15;
    /// Observation intervals simulated and discarded before x_0 is recorded.
    std::size_t burn_in = 10;
  };

  /// \throws std::invalid_argument when dim < 4, substeps < 1, dt_obs <= 0,
  ///         diffusion < 0, or matrix dimensions disagree.
  Lorenz96Spec(Dynamics dynamics, Matrix observation, Matrix obs_cov, GaussianParams init);

  [[nodiscard]] std::size_t state_dim() const noexcept { return dynamics_.dim; }
  [[nodiscard]] std::size_t obs_dim() const noexcept { return static_cast<std::size_t>(observation_.rows()); }

  [[nodiscard]] const Dynamics& dynamics() const noexcept { return dynamics_; }
  [[nodiscard]] const Matrix& observation() const noexcept { return observation_; }
  [[nodiscard]] const Matrix& obs_cov() const noexcept { return obs_noise_.cov(); }
  [[nodiscard]] const GaussianParams& obs_noise() const noexcept { return obs_noise_; }
  [[nodiscard]] const GaussianParams& init() const noexcept { return init_; }

 private:
  Dynamics dynamics_;
  Matrix observation_;
  GaussianParams obs_noise_;
  GaussianParams init_;
};

using Model = std::variant<LgssmSpec, Lorenz96Spec>;

/// states holds x_0..x_T; observations holds y_1..y_T.
struct Trajectory {
  std::vector<Vector> states;
  std::vector<Vector> observations;

  [[nodiscard]] std::size_t length() const noexcept { return observations.size(); }
};

/// Magnitude beyond which Euler-Maruyama propagation is declared divergent.
inline constexpr double kBlowupThreshold = 1e6;

/// Tridiagonal benchmark model: A has 0.6 on the diagonal and 0.2 on the first
/// off-diagonals, C = [I_{d/2} | 0], Q = 1e-2 I, R = 1e-4 I, x_0 ~ N(0, I).
///
/// \throws std::invalid_argument if d is zero or odd.
[[nodiscard]] LgssmSpec lgssm_standard(std::size_t d);

[[nodiscard]] Trajectory lgssm_simulate(const LgssmSpec& spec, std::size_t steps, RandomStream& rng);

/// Cyclic Lorenz'96 drift (x_{k+1} - x_{k-2}) x_{k-1} - x_k + F.
void lorenz96_drift(const Eigen::Ref<const Vector>& x, double forcing, Eigen::Ref<Vector> out);
[[nodiscard]] Vector lorenz96_drift(const Vector& x, double forcing);

/// Advances one observation interval with `substeps` Euler-Maruyama steps,
/// drawing one standard-normal d-vector per substep.
///
/// \throws NumericalBlowup if any component exceeds kBlowupThreshold.
void lorenz96_propagate(const Lorenz96Spec& spec, const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out,
                        RandomStream& rng);
[[nodiscard]] Vector lorenz96_propagate(const Lorenz96Spec& spec, const Vector& x, RandomStream& rng);

/// d = 10, F = 12, b = 0.1, dt_obs = 0.1, 15 substeps, C = [I_5 | 0], R = 1e-4 I_5,
/// x_0 ~ N(F 1, 1e-2 I) followed by 10 burn-in intervals.
[[nodiscard]] Lorenz96Spec lorenz96_standard();

/// x_0 is recorded after the burn-in; y_t = C x_t + e_t.
[[nodiscard]] Trajectory lorenz96_simulate(const Lorenz96Spec& spec, std::size_t steps, RandomStream& rng);

// Uniform access over Model.

[[nodiscard]] std::size_t state_dim(const Model& model);
[[nodiscard]] std::size_t obs_dim(const Model& model);
[[nodiscard]] const Matrix& observation_matrix(const Model& model);
/// N(0, R) for the observation noise.
[[nodiscard]] const GaussianParams& observation_noise(const Model& model);

/// Forward simulation of x_t given x_{t-1}; only simulation is required of a model.
void propagate(const Model& model, const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out, RandomStream& rng);

/// True for models of the form x_t = f(x_{t-1}) + v_t with v_t ~ N(0, Q).
[[nodiscard]] bool has_additive_gaussian_noise(const Model& model);
/// f(x) for additive-Gaussian models. \throws std::invalid_argument otherwise.
[[nodiscard]] Vector mean_dynamics(const Model& model, const Eigen::Ref<const Vector>& x);
/// N(0, Q) for additive-Gaussian models. \throws std::invalid_argument otherwise.
[[nodiscard]] const GaussianParams& additive_process_noise(const Model& model);

[[nodiscard]] Trajectory simulate(const Model& model, std::size_t steps, RandomStream& rng);

/// Simulates from the stream derive_seed(seed, {attempt}) for attempt = 0, 1, ...
/// until a trajectory completes without NumericalBlowup. Euler-Maruyama with
/// the standard Lorenz'96 step is only marginally stable, so most long paths
/// eventually diverge.
///
/// \throws NumericalBlowup when all `max_attempts` draws diverge.
[[nodiscard]] Trajectory simulate_finite(const Model& model, std::size_t steps, std::uint64_t seed,
                                         std::size_t max_attempts = 1000);

/// Prior over x_0 handed to filters.
///
/// The linear model uses its own initial distribution. Lorenz'96 truth starts
/// after a burn-in the filter cannot reproduce, so its prior is the initial
/// covariance re-centred on the recorded x_0.
[[nodiscard]] GaussianParams filter_prior(const Model& model, const Trajectory& trajectory);

/// CSV with header t,x_0..x_{d-1},y_0..y_{p-1}; y cells are empty on row t=0.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace capf

#endif  // CAPF_MODELS_HPP
