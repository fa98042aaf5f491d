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

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "capf/error.hpp"
#include "capf/models.hpp"
#include "oracles.hpp"

namespace {

using capf::GaussianParams;
using capf::Lorenz96Spec;
using capf::Matrix;
using capf::Vector;

Vector rotate(const Vector& x, Eigen::Index shift) {
  const auto d = x.size();
  Vector out(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    out[(k + shift) % d] = x[k];
  }
  return out;
}

Lorenz96Spec deterministic_lorenz(std::size_t substeps, double dt_obs = 0.1) {
  Lorenz96Spec::Dynamics dyn;
  dyn.diffusion = 0.0;
  dyn.substeps = substeps;
  dyn.dt_obs = dt_obs;
  const auto d = static_cast<Eigen::Index>(dyn.dim);
  Matrix c = Matrix::Identity(d, d);
  return {dyn, c, 1e-4 * Matrix::Identity(d, d), GaussianParams(Vector::Constant(d, 12.0), Matrix::Zero(d, d))};
}

TEST(LgssmStandard, TridiagonalTransition) {
  const auto spec = capf::lgssm_standard(10);
  const Matrix& a = spec.transition();
  EXPECT_EQ(a(0, 0), 0.6);
  EXPECT_EQ(a(0, 1), 0.2);
  EXPECT_EQ(a(0, 2), 0.0);
  EXPECT_EQ(a(5, 4), 0.2);
  EXPECT_EQ((a.array() != 0.0).count(), 28);
}

TEST(LgssmStandard, NoiseCovariances) {
  const auto spec = capf::lgssm_standard(10);
  EXPECT_EQ(spec.process_cov(), Matrix(1e-2 * Matrix::Identity(10, 10)));
  EXPECT_EQ(spec.obs_cov(), Matrix(1e-4 * Matrix::Identity(5, 5)));
}

TEST(LgssmStandard, ObservesTheFirstHalf) {
  const auto spec = capf::lgssm_standard(4);
  Matrix expected = Matrix::Zero(2, 4);
  expected(0, 0) = 1.0;
  expected(1, 1) = 1.0;
  EXPECT_EQ(spec.observation(), expected);
}

TEST(LgssmStandard, OddDimensionIsRejected) { EXPECT_THROW((void)capf::lgssm_standard(3), std::invalid_argument); }

TEST(LgssmSimulate, NoiselessIdentityDynamicsStayPut) {
  const Vector x0 = Vector::Ones(2);
  Matrix c(1, 2);
  c << 1.0, 2.0;
  const capf::LgssmSpec spec(Matrix::Identity(2, 2), c, Matrix::Zero(2, 2), Matrix::Zero(1, 1),
                             GaussianParams(x0, Matrix::Zero(2, 2)));
  capf::RandomStream rng(1);
  const auto traj = capf::lgssm_simulate(spec, 5, rng);
  ASSERT_EQ(traj.states.size(), 6U);
  ASSERT_EQ(traj.observations.size(), 5U);
  for (const auto& x : traj.states) {
    EXPECT_EQ(x, x0);
  }
  for (const auto& y : traj.observations) {
    EXPECT_EQ(y[0], 3.0);
  }
}

TEST(LgssmSimulate, ScalarStationaryVariance) {
  const capf::LgssmSpec spec(Matrix::Constant(1, 1, 0.6), Matrix::Identity(1, 1), Matrix::Constant(1, 1, 0.01),
                             Matrix::Constant(1, 1, 1.0), GaussianParams(Vector::Zero(1), Matrix::Constant(1, 1, 0.015625)));
  capf::RandomStream rng(8);
  const auto traj = capf::lgssm_simulate(spec, 10000, rng);
  double sum = 0.0;
  double sq = 0.0;
  for (std::size_t t = 1; t < traj.states.size(); ++t) {
    sum += traj.states[t][0];
    sq += traj.states[t][0] * traj.states[t][0];
  }
  const double n = 10000.0;
  const double var = sq / n - (sum / n) * (sum / n);
  EXPECT_NEAR(var, 0.01 / (1.0 - 0.36), 0.1 * 0.015625);
}

TEST(LgssmSimulate, SameSeedSameTrajectory) {
  const auto spec = capf::lgssm_standard(4);
  capf::RandomStream a(5);
  capf::RandomStream b(5);
  const auto ta = capf::lgssm_simulate(spec, 20, a);
  const auto tb = capf::lgssm_simulate(spec, 20, b);
  EXPECT_EQ(ta.states, tb.states);
  EXPECT_EQ(ta.observations, tb.observations);
}

TEST(Lorenz96Drift, ZeroStateGivesForcing) {
  EXPECT_EQ(capf::lorenz96_drift(Vector::Zero(10), 12.0), Vector::Constant(10, 12.0));
}

TEST(Lorenz96Drift, ConstantForcingStateIsAFixedPoint) {
  EXPECT_EQ(capf::lorenz96_drift(Vector::Constant(10, 12.0), 12.0), Vector::Zero(10));
}

TEST(Lorenz96Drift, HandEvaluatedComponent) {
  Vector x(5);
  x << 1, 2, 3, 4, 5;
  const Vector drift = capf::lorenz96_drift(x, 0.0);
  EXPECT_EQ(drift[0], -11.0);
  EXPECT_EQ(drift, capf::testing::lorenz_drift(x, 0.0));
}

TEST(Lorenz96DriftProperty, RotationEquivariance) {
  capf::testing::Gen gen(13);
  for (int trial = 0; trial < 100; ++trial) {
    const auto d = static_cast<Eigen::Index>(gen.index(4, 16));
    const Vector x = 5.0 * gen.vector(d);
    const auto shift = static_cast<Eigen::Index>(gen.index(0, static_cast<std::size_t>(d - 1)));
    const double forcing = gen.uniform(-10.0, 20.0);
    const Vector lhs = capf::lorenz96_drift(rotate(x, shift), forcing);
    const Vector rhs = rotate(capf::lorenz96_drift(x, forcing), shift);
    EXPECT_EQ(lhs, rhs);
  }
}

TEST(Lorenz96Propagate, NoiselessFixedPointIsPreserved) {
  const auto spec = deterministic_lorenz(15);
  capf::RandomStream rng(0);
  EXPECT_EQ(capf::lorenz96_propagate(spec, Vector::Constant(10, 12.0), rng), Vector::Constant(10, 12.0));
}

TEST(Lorenz96Propagate, SingleSubstepIsOneEulerStep) {
  const double h = 0.01;
  const auto spec = deterministic_lorenz(1, h);
  capf::testing::Gen gen(3);
  const Vector x = Vector::Constant(10, 12.0) + gen.vector(10);
  capf::RandomStream rng(0);
  const Vector expected = x + h * capf::lorenz96_drift(x, 12.0);
  EXPECT_EQ(capf::lorenz96_propagate(spec, x, rng), expected);
}

TEST(Lorenz96Propagate, NoiselessPropagationIgnoresTheStream) {
  const auto spec = deterministic_lorenz(15);
  const Vector x = Vector::LinSpaced(10, -3.0, 7.0);
  capf::RandomStream a(1);
  capf::RandomStream b(2);
  EXPECT_EQ(capf::lorenz96_propagate(spec, x, a), capf::lorenz96_propagate(spec, x, b));
}

TEST(Lorenz96Propagate, EulerConvergesAtFirstOrder) {
  const double horizon = 0.1;
  Vector x0 = Vector::Constant(10, 12.0);
  x0[0] += 1.0;
  // Move onto the chaotic attractor first, so every term of the drift is active.
  x0 = capf::testing::lorenz_rk4(x0, 12.0, 2.0, 20000);
  const Vector reference = capf::testing::lorenz_rk4(x0, 12.0, horizon, 100000);

  std::vector<double> log_h;
  std::vector<double> log_err;
  for (std::size_t m = 8; m <= 512; m *= 2) {
    capf::RandomStream rng(0);
    const Vector x = capf::lorenz96_propagate(deterministic_lorenz(m, horizon), x0, rng);
    log_h.push_back(std::log(horizon / static_cast<double>(m)));
    log_err.push_back(std::log((x - reference).norm()));
  }
  // Least-squares slope of log error against log step.
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t k = 0; k < log_h.size(); ++k) {
    mx += log_h[k];
    my += log_err[k];
  }
  mx /= static_cast<double>(log_h.size());
  my /= static_cast<double>(log_h.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t k = 0; k < log_h.size(); ++k) {
    sxy += (log_h[k] - mx) * (log_err[k] - my);
    sxx += (log_h[k] - mx) * (log_h[k] - mx);
  }
  EXPECT_NEAR(sxy / sxx, 1.0, 0.05);
}

TEST(Lorenz96Propagate, BlowupIsReported) {
  Lorenz96Spec::Dynamics dyn;
  dyn.diffusion = 0.0;
  dyn.substeps = 1;
  dyn.dt_obs = 1.0;
  const auto spec = Lorenz96Spec(dyn, Matrix::Identity(10, 10), Matrix::Identity(10, 10),
                                 GaussianParams(Vector::Zero(10), Matrix::Zero(10, 10)));
  capf::RandomStream rng(0);
  EXPECT_THROW((void)capf::lorenz96_propagate(spec, Vector::LinSpaced(10, -1e4, 1e4), rng), capf::NumericalBlowup);
}

TEST(Lorenz96Spec, RejectsInvalidDynamics) {
  Lorenz96Spec::Dynamics dyn;
  dyn.dim = 3;
  EXPECT_THROW(Lorenz96Spec(dyn, Matrix::Identity(3, 3), Matrix::Identity(3, 3),
                            GaussianParams(Vector::Zero(3), Matrix::Identity(3, 3))),
               std::invalid_argument);
}

TEST(Lorenz96Standard, Parameters) {
  const auto spec = capf::lorenz96_standard();
  EXPECT_EQ(spec.dynamics().forcing, 12.0);
  EXPECT_EQ(spec.dynamics().diffusion, 0.1);
  EXPECT_EQ(spec.dynamics().dt_obs, 0.1);
  EXPECT_EQ(spec.dynamics().substeps, 15U);
  EXPECT_EQ(spec.observation().rows(), 5);
  EXPECT_EQ(spec.observation().cols(), 10);
  EXPECT_EQ(spec.obs_cov(), Matrix(1e-4 * Matrix::Identity(5, 5)));
}

TEST(Lorenz96Simulate, StandardRunEitherStaysBoundedOrReportsBlowup) {
  const auto spec = capf::lorenz96_standard();
  std::size_t completed = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    capf::RandomStream rng(seed);
    try {
      const auto traj = capf::lorenz96_simulate(spec, 200, rng);
      ++completed;
      for (const auto& x : traj.states) {
        ASSERT_TRUE(x.allFinite());
        ASSERT_LE(x.cwiseAbs().maxCoeff(), capf::kBlowupThreshold);
      }
    } catch (const capf::NumericalBlowup&) {
    }
  }
  EXPECT_GT(completed, 0U);
}

TEST(Lorenz96Simulate, RetriedSimulationStaysOnTheAttractor) {
  const capf::Model model = capf::lorenz96_standard();
  const auto traj = capf::simulate_finite(model, 200, 4);
  ASSERT_EQ(traj.states.size(), 201U);
  for (const auto& x : traj.states) {
    ASSERT_LT(x.cwiseAbs().maxCoeff(), 50.0);
  }
  EXPECT_EQ(capf::simulate_finite(model, 200, 4).observations, traj.observations);
}

TEST(Lorenz96Simulate, RetryStartsFromTheFirstDerivedStream) {
  const capf::Model model = capf::lgssm_standard(4);
  capf::RandomStream rng(capf::derive_seed(9, {0}));
  EXPECT_EQ(capf::simulate_finite(model, 10, 9).observations, capf::simulate(model, 10, rng).observations);
}

TEST(Lorenz96Simulate, NoiselessEulerAtTheStandardStepCanDiverge) {
  // Forward Euler amplifies weakly damped oscillatory modes, and at
  // h = 0.1 / 15 attractor-scale states excite them.
  Lorenz96Spec::Dynamics dyn;
  dyn.diffusion = 0.0;
  const Lorenz96Spec spec(dyn, Matrix::Identity(10, 10), Matrix::Identity(10, 10),
                          GaussianParams(Vector::Constant(10, 12.0), Matrix::Identity(10, 10)));
  capf::RandomStream rng(0);
  std::size_t diverged = 0;
  for (int run = 0; run < 20; ++run) {
    Vector x = capf::mvn_draw(spec.init(), rng);
    try {
      for (int t = 0; t < 1000; ++t) {
        x = capf::lorenz96_propagate(spec, x, rng);
      }
    } catch (const capf::NumericalBlowup&) {
      ++diverged;
    }
  }
  EXPECT_GT(diverged, 0U);
}

TEST(Lorenz96Simulate, NoiselessObservationsAreTheObservedStates) {
  Lorenz96Spec::Dynamics dyn;
  dyn.diffusion = 0.0;
  dyn.substeps = 60;
  Matrix c = Matrix::Zero(5, 10);
  c.leftCols(5).setIdentity();
  const Lorenz96Spec spec(dyn, c, Matrix::Zero(5, 5), GaussianParams(Vector::Constant(10, 12.0), 1e-2 * Matrix::Identity(10, 10)));
  capf::RandomStream rng(9);
  const auto traj = capf::lorenz96_simulate(spec, 30, rng);
  for (std::size_t t = 1; t <= 30; ++t) {
    EXPECT_EQ(traj.observations[t - 1], Vector(traj.states[t].head(5)));
  }
}

TEST(Lorenz96Simulate, SameSeedSameTrajectory) {
  const auto spec = capf::lorenz96_standard();
  const auto attempt = [&](capf::RandomStream rng) {
    try {
      return capf::lorenz96_simulate(spec, 20, rng).observations;
    } catch (const capf::NumericalBlowup&) {
      return std::vector<Vector>{};
    }
  };
  for (std::uint64_t seed = 10; seed < 15; ++seed) {
    EXPECT_EQ(attempt(capf::RandomStream(seed)), attempt(capf::RandomStream(seed)));
  }
}

TEST(ModelVariant, AdditiveStructureOnlyForTheLinearModel) {
  const capf::Model lin = capf::lgssm_standard(4);
  const capf::Model lor = capf::lorenz96_standard();
  EXPECT_TRUE(capf::has_additive_gaussian_noise(lin));
  EXPECT_FALSE(capf::has_additive_gaussian_noise(lor));
  EXPECT_THROW((void)capf::mean_dynamics(lor, Vector::Zero(10)), std::invalid_argument);
  EXPECT_EQ(capf::state_dim(lor), 10U);
  EXPECT_EQ(capf::obs_dim(lin), 2U);
}

TEST(LorenzFilterPrior, CentredOnTheRecordedInitialState) {
  const capf::Model model = capf::lorenz96_standard();
  const auto traj = capf::simulate_finite(model, 5, 2);
  const auto prior = capf::filter_prior(model, traj);
  EXPECT_EQ(prior.mean(), traj.states.front());
  EXPECT_EQ(prior.cov(), Matrix(1e-2 * Matrix::Identity(10, 10)));
}

TEST(TrajectoryCsv, HeaderAndEmptyObservationCellsAtTimeZero) {
  const auto spec = capf::lgssm_standard(2);
  capf::RandomStream rng(1);
  const auto traj = capf::lgssm_simulate(spec, 3, rng);
  std::ostringstream out;
  capf::write_trajectory_csv(out, traj);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,x_0,x_1,y_0");
  std::getline(in, line);
  EXPECT_EQ(line.back(), ',');
  EXPECT_EQ(line.rfind("0,", 0), 0U);
  int rows = 1;
  while (std::getline(in, line)) {
    ++rows;
  }
  EXPECT_EQ(rows, 4);
}

}  // namespace
