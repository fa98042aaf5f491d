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

// Reference versus OpenMP kernels. The second argument of every benchmark
// selects the backend: 0 = Reference, 1 = OpenMP.

#include <benchmark/benchmark.h>

#include <vector>

#include "capf/kernels.hpp"
#include "capf/models.hpp"
#include "capf/smc.hpp"

namespace {

using capf::Matrix;
using capf::Vector;
using capf::kernels::Backend;
using capf::kernels::StreamKeys;

Backend backend_of(const benchmark::State& state) { return state.range(1) == 0 ? Backend::Reference : Backend::OpenMP; }

Matrix spread(Eigen::Index n, Eigen::Index d, double centre) {
  capf::RandomStream rng(1);
  Matrix m(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      m(i, j) = centre + rng.normal();
    }
  }
  return m;
}

void BM_PropagateLorenz(benchmark::State& state) {
  const capf::Model model = capf::lorenz96_standard();
  const auto n = state.range(0);
  const Matrix in = spread(n, 10, 4.0);
  Matrix out(n, 10);
  const StreamKeys keys(3);
  std::size_t t = 1;
  for (auto _ : state) {
    capf::kernels::propagate(backend_of(state), model, in, out, keys, t++);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}

void BM_PropagateLgssm(benchmark::State& state) {
  const capf::Model model = capf::lgssm_standard(10);
  const auto n = state.range(0);
  const Matrix in = spread(n, 10, 0.0);
  Matrix out(n, 10);
  const StreamKeys keys(3);
  std::size_t t = 1;
  for (auto _ : state) {
    capf::kernels::propagate(backend_of(state), model, in, out, keys, t++);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}

void BM_ConjugateMove(benchmark::State& state) {
  const auto spec = capf::lgssm_standard(10);
  Matrix shape = Matrix::Zero(10, 10);
  shape.topLeftCorner(5, 5).setIdentity();
  const auto update = capf::conjugate_update(0.25 * shape + 1e-6 * Matrix::Identity(10, 10), spec.observation(),
                                             spec.obs_cov());
  const auto n = state.range(0);
  const Matrix points = spread(n, 10, 0.0);
  const Vector y = Vector::Constant(5, 0.1);
  Matrix out(n, 10);
  const StreamKeys keys(4);
  std::size_t t = 1;
  for (auto _ : state) {
    capf::kernels::conjugate_move(backend_of(state), points, spec.observation(), y, update.gain, update.move, out,
                                  keys, t++);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}

void BM_WeightedMeanCov(benchmark::State& state) {
  const auto n = state.range(0);
  const Matrix points = spread(n, 10, 0.0);
  const std::vector<double> w(static_cast<std::size_t>(n), 1.0 / static_cast<double>(n));
  for (auto _ : state) {
    benchmark::DoNotOptimize(capf::kernels::weighted_mean_cov(backend_of(state), points, w));
  }
  state.SetItemsProcessed(state.iterations() * n);
}

void BM_CapfFilterLorenz(benchmark::State& state) {
  const capf::Model model = capf::lorenz96_standard();
  const auto traj = capf::simulate_finite(model, 20, 5);
  const auto prior = capf::filter_prior(model, traj);
  capf::FilterConfig fc;
  fc.n_particles = static_cast<std::size_t>(state.range(0));
  fc.eps = 0.5;
  fc.cov_policy = capf::CovPolicy::weighted_sample_cov();
  fc.backend = backend_of(state);
  for (auto _ : state) {
    benchmark::DoNotOptimize(capf::run_filter(model, traj.observations, prior, capf::ProposalKind::Capf, fc).log_z);
  }
}

void Sizes(benchmark::internal::Benchmark* b) {
  for (const int n : {1000, 10000}) {
    b->Args({n, 0})->Args({n, 1});
  }
}

BENCHMARK(BM_PropagateLorenz)->Apply(Sizes);
BENCHMARK(BM_PropagateLgssm)->Apply(Sizes);
BENCHMARK(BM_ConjugateMove)->Apply(Sizes);
BENCHMARK(BM_WeightedMeanCov)->Apply(Sizes);
BENCHMARK(BM_CapfFilterLorenz)->Args({2000, 0})->Args({2000, 1})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
