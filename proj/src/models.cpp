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

#include "capf/models.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "capf/csv.hpp"
#include "capf/error.hpp"

namespace capf {

namespace {

GaussianParams zero_mean(const Matrix& cov) { return {Vector::Zero(cov.rows()), cov}; }

void require(bool condition, const char* message) {
  if (!condition) {
    throw std::invalid_argument(message);
  }
}

Matrix half_observed(std::size_t d) {
  const auto p = static_cast<Eigen::Index>(d / 2);
  Matrix c = Matrix::Zero(p, static_cast<Eigen::Index>(d));
  c.leftCols(p).setIdentity();
  return c;
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

LgssmSpec::LgssmSpec(Matrix transition, Matrix observation, Matrix process_cov, Matrix obs_cov, GaussianParams init)
    : transition_(std::move(transition)),
      observation_(std::move(observation)),
      process_noise_(zero_mean(process_cov)),
      obs_noise_(zero_mean(obs_cov)),
      init_(std::move(init)) {
  const auto d = transition_.rows();
  require(transition_.cols() == d, "LgssmSpec: A must be square");
  require(observation_.cols() == d, "LgssmSpec: C must have d columns");
  require(process_noise_.dim() == static_cast<std::size_t>(d), "LgssmSpec: Q must be d x d");
  require(obs_noise_.dim() == static_cast<std::size_t>(observation_.rows()), "LgssmSpec: R must be p x p");
  require(init_.dim() == static_cast<std::size_t>(d), "LgssmSpec: initial distribution must have dimension d");
  require(transition_.allFinite() && observation_.allFinite(), "LgssmSpec: A and C must be finite");
}

Lorenz96Spec::Lorenz96Spec(Dynamics dynamics, Matrix observation, Matrix obs_cov, GaussianParams init)
    : dynamics_(dynamics),
      observation_(std::move(observation)),
      obs_noise_(zero_mean(obs_cov)),
      init_(std::move(init)) {
  require(dynamics_.dim >= 4, "Lorenz96Spec: dimension must be at least 4");
  require(dynamics_.substeps >= 1, "Lorenz96Spec: need at least one Euler-Maruyama substep");
  require(dynamics_.dt_obs > 0.0, "Lorenz96Spec: dt_obs must be positive");
  require(dynamics_.diffusion >= 0.0, "Lorenz96Spec: diffusion must be non-negative");
  require(observation_.cols() == static_cast<Eigen::Index>(dynamics_.dim), "Lorenz96Spec: C must have d columns");
  require(obs_noise_.dim() == static_cast<std::size_t>(observation_.rows()), "Lorenz96Spec: R must be p x p");
  require(init_.dim() == dynamics_.dim, "Lorenz96Spec: initial distribution must have dimension d");
}

LgssmSpec lgssm_standard(std::size_t d) {
  require(d > 0 && d % 2 == 0, "lgssm_standard: dimension must be even and positive");
  const auto n = static_cast<Eigen::Index>(d);
  Matrix a = Matrix::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    a(k, k) = 0.6;
    if (k + 1 < n) {
      a(k, k + 1) = 0.2;
      a(k + 1, k) = 0.2;
    }
  }
  const Matrix c = half_observed(d);
  Matrix q = 1e-2 * Matrix::Identity(n, n);
  Matrix r = 1e-4 * Matrix::Identity(c.rows(), c.rows());
  GaussianParams init(Vector::Zero(n), Matrix::Identity(n, n));
  return {std::move(a), c, std::move(q), std::move(r), std::move(init)};
}

Trajectory lgssm_simulate(const LgssmSpec& spec, std::size_t steps, RandomStream& rng) {
  require(steps >= 1, "lgssm_simulate: need at least one step");
  Trajectory out;
  out.states.reserve(steps + 1);
  out.observations.reserve(steps);
  out.states.push_back(mvn_draw(spec.init(), rng));
  for (std::size_t t = 1; t <= steps; ++t) {
    Vector x = spec.transition() * out.states.back() + mvn_draw(spec.process_noise(), rng);
    Vector y = spec.observation() * x + mvn_draw(spec.obs_noise(), rng);
    out.states.push_back(std::move(x));
    out.observations.push_back(std::move(y));
  }
  return out;
}

void lorenz96_drift(const Eigen::Ref<const Vector>& x, double forcing, Eigen::Ref<Vector> out) {
  const auto d = x.size();
  for (Eigen::Index k = 0; k < d; ++k) {
    const auto kp1 = k + 1 == d ? 0 : k + 1;
    const auto km1 = k == 0 ? d - 1 : k - 1;
    const auto km2 = k >= 2 ? k - 2 : k + d - 2;
    out[k] = (x[kp1] - x[km2]) * x[km1] - x[k] + forcing;
  }
}

Vector lorenz96_drift(const Vector& x, double forcing) {
  require(x.size() >= 4, "lorenz96_drift: dimension must be at least 4");
  Vector out(x.size());
  lorenz96_drift(x, forcing, out);
  return out;
}

void lorenz96_propagate(const Lorenz96Spec& spec, const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out,
                        RandomStream& rng) {
  const auto& dyn = spec.dynamics();
  const double h = dyn.dt_obs / static_cast<double>(dyn.substeps);
  const double noise_scale = dyn.diffusion * std::sqrt(h);
  const auto d = x.size();

  Vector state = x;
  Vector drift(d);
  for (std::size_t m = 0; m < dyn.substeps; ++m) {
    lorenz96_drift(state, dyn.forcing, drift);
    for (Eigen::Index k = 0; k < d; ++k) {
      state[k] += h * drift[k] + noise_scale * rng.normal();
    }
    // Also catches NaN, which compares false.
    if (!(state.cwiseAbs().maxCoeff() <= kBlowupThreshold)) {
      throw NumericalBlowup("lorenz96_propagate: state left the region |x| <= 1e6");
    }
  }
  out = state;
}

Vector lorenz96_propagate(const Lorenz96Spec& spec, const Vector& x, RandomStream& rng) {
  require(static_cast<std::size_t>(x.size()) == spec.state_dim(), "lorenz96_propagate: dimension mismatch");
  Vector out(x.size());
  lorenz96_propagate(spec, x, out, rng);
  return out;
}

Lorenz96Spec lorenz96_standard() {
  Lorenz96Spec::Dynamics dyn;
  const auto d = static_cast<Eigen::Index>(dyn.dim);
  const Matrix c = half_observed(dyn.dim);
  Matrix r = 1e-4 * Matrix::Identity(c.rows(), c.rows());
  GaussianParams init(Vector::Constant(d, dyn.forcing), 1e-2 * Matrix::Identity(d, d));
  return {dyn, c, std::move(r), std::move(init)};
}

Trajectory lorenz96_simulate(const Lorenz96Spec& spec, std::size_t steps, RandomStream& rng) {
  require(steps >= 1, "lorenz96_simulate: need at least one step");
  Vector x = mvn_draw(spec.init(), rng);
  for (std::size_t b = 0; b < spec.dynamics().burn_in; ++b) {
    x = lorenz96_propagate(spec, x, rng);
  }
  Trajectory out;
  out.states.reserve(steps + 1);
  out.observations.reserve(steps);
  out.states.push_back(x);
  for (std::size_t t = 1; t <= steps; ++t) {
    x = lorenz96_propagate(spec, x, rng);
    out.observations.push_back(spec.observation() * x + mvn_draw(spec.obs_noise(), rng));
    out.states.push_back(x);
  }
  return out;
}

std::size_t state_dim(const Model& model) {
  return std::visit([](const auto& m) { return m.state_dim(); }, model);
}

std::size_t obs_dim(const Model& model) {
  return std::visit([](const auto& m) { return m.obs_dim(); }, model);
}

const Matrix& observation_matrix(const Model& model) {
  return std::visit([](const auto& m) -> const Matrix& { return m.observation(); }, model);
}

const GaussianParams& observation_noise(const Model& model) {
  return std::visit([](const auto& m) -> const GaussianParams& { return m.obs_noise(); }, model);
}

void propagate(const Model& model, const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out, RandomStream& rng) {
  std::visit(Overloaded{
                 [&](const LgssmSpec& m) {
                   out = m.transition() * x + mvn_draw(m.process_noise(), rng);
                 },
                 [&](const Lorenz96Spec& m) { lorenz96_propagate(m, x, out, rng); },
             },
             model);
}

bool has_additive_gaussian_noise(const Model& model) { return std::holds_alternative<LgssmSpec>(model); }

Vector mean_dynamics(const Model& model, const Eigen::Ref<const Vector>& x) {
  const auto* lgssm = std::get_if<LgssmSpec>(&model);
  if (lgssm == nullptr) {
    throw std::invalid_argument("mean_dynamics: model has no additive-Gaussian form");
  }
  return lgssm->transition() * x;
}

const GaussianParams& additive_process_noise(const Model& model) {
  const auto* lgssm = std::get_if<LgssmSpec>(&model);
  if (lgssm == nullptr) {
    throw std::invalid_argument("additive_process_noise: model has no additive-Gaussian form");
  }
  return lgssm->process_noise();
}

Trajectory simulate(const Model& model, std::size_t steps, RandomStream& rng) {
  return std::visit(Overloaded{
                        [&](const LgssmSpec& m) { return lgssm_simulate(m, steps, rng); },
                        [&](const Lorenz96Spec& m) { return lorenz96_simulate(m, steps, rng); },
                    },
                    model);
}

Trajectory simulate_finite(const Model& model, std::size_t steps, std::uint64_t seed, std::size_t max_attempts) {
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    RandomStream rng(derive_seed(seed, {attempt}));
    try {
      return simulate(model, steps, rng);
    } catch (const NumericalBlowup&) {
    }
  }
  throw NumericalBlowup("simulate_finite: every attempt diverged");
}

GaussianParams filter_prior(const Model& model, const Trajectory& trajectory) {
  return std::visit(Overloaded{
                        [](const LgssmSpec& m) { return m.init(); },
                        [&](const Lorenz96Spec& m) {
                          if (trajectory.states.empty()) {
                            throw std::invalid_argument("filter_prior: trajectory has no x_0");
                          }
                          return GaussianParams(trajectory.states.front(), m.init().cov());
                        },
                    },
                    model);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  if (trajectory.states.size() != trajectory.observations.size() + 1) {
    throw std::invalid_argument("write_trajectory_csv: need T+1 states for T observations");
  }
  const auto d = trajectory.states.front().size();
  const auto p = trajectory.observations.empty() ? 0 : trajectory.observations.front().size();
  out << 't';
  for (Eigen::Index j = 0; j < d; ++j) {
    out << ",x_" << j;
  }
  for (Eigen::Index j = 0; j < p; ++j) {
    out << ",y_" << j;
  }
  out << '\n';
  for (std::size_t t = 0; t < trajectory.states.size(); ++t) {
    out << t;
    for (Eigen::Index j = 0; j < d; ++j) {
      out << ',' << csv::format_real(trajectory.states[t][j]);
    }
    for (Eigen::Index j = 0; j < p; ++j) {
      out << ',';
      if (t > 0) {
        out << csv::format_real(trajectory.observations[t - 1][j]);
      }
    }
    out << '\n';
  }
}

}  // namespace capf
