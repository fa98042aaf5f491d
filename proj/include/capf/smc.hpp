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

#ifndef CAPF_SMC_HPP
#define CAPF_SMC_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "capf/kernels.hpp"
#include "capf/linalg.hpp"
#include "capf/models.hpp"
#include "capf/random.hpp"

/**
 * \file
 * \brief Particle filter engine.
 *
 * Three proposals share one loop:
 *
 *  - bootstrap: propagate with the model, weight by p(y_t | x_t);
 *  - locally optimal: for x_t = f(x_{t-1}) + v_t, sample p(x_t | x_{t-1}, y_t)
 *    and weight by p(y_t | x_{t-1});
 *  - conjugate artificial process noise (CAPF): propagate x'_t with the model,
 *    weight by N(y_t | C x'_t, R + C eps^2 S C^T), then move x_t from x'_t with
 *    the closed-form conditional of the extra stage x_t = x'_t + eps xi_t,
 *    xi_t ~ N(0, S).
 *
 * Random draws come from substreams keyed by (run seed, stage, t, particle);
 * see kernels::Stage. With eps = 0 the CAPF step skips its second stage, and
 * because the propagation substreams are shared with the bootstrap step the
 * two filters then produce identical output.
 */

namespace capf {

using kernels::Backend;

/// Runs whose ESS drops strictly below this value are degenerate.
inline constexpr double kDegeneracyThreshold = 2.0;

enum class ProposalKind { Bootstrap, Capf, LocallyOptimal };

/// Shape S of the artificial noise.
enum class CovPolicyKind {
  /// diag(I_p, 0): noise on the observed block only (assumes C = [I_p | 0]).
  BlockDiagonalObserved,
  /// Bias-corrected weighted sample covariance of the intermediate states.
  WeightedSampleCov,
  /// A caller-supplied constant matrix.
  FixedMatrix,
};

struct CovPolicy {
  CovPolicyKind kind = CovPolicyKind::BlockDiagonalObserved;
  Matrix fixed;  ///< Used only by FixedMatrix.

  static CovPolicy block_diagonal() { return {CovPolicyKind::BlockDiagonalObserved, {}}; }
  static CovPolicy weighted_sample_cov() { return {CovPolicyKind::WeightedSampleCov, {}}; }
  static CovPolicy fixed_matrix(Matrix s) { return {CovPolicyKind::FixedMatrix, std::move(s)}; }
};

struct ResamplingRule {
  enum class Kind { EveryStep, Adaptive };
  Kind kind = Kind::EveryStep;
  /// Adaptive resamples when ESS < threshold * N; must lie in (0, 1].
  double threshold = 0.5;

  static ResamplingRule every_step() { return {Kind::EveryStep, 0.5}; }
  static ResamplingRule adaptive(double threshold) { return {Kind::Adaptive, threshold}; }
};

struct FilterConfig {
  std::size_t n_particles = 1000;
  double eps = 0.0;
  CovPolicy cov_policy;
  ResamplingRule resampling;
  std::uint64_t seed = 0;
  Backend backend = Backend::OpenMP;
  bool keep_final_ensemble = false;

  /// \throws std::invalid_argument when a field is out of range.
  void validate() const;
};

/// N particles of dimension d (rows) with normalized log-weights.
struct ParticleEnsemble {
  Matrix states;
  /// x'_t of the CAPF first stage; empty for the other proposals.
  Matrix intermediate_states;
  /// Normalized log-weights. A step leaves these at their pre-step values.
  std::vector<double> log_weights;
  /// log p-ratio contributed by the latest step, one per particle.
  std::vector<double> incremental_log_weights;
  std::size_t t = 0;

  [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(states.rows()); }
  [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(states.cols()); }
  [[nodiscard]] std::vector<double> weights() const;
};

struct NormalizedWeights {
  std::vector<double> weights;
  std::vector<double> log_weights;
  /// log sum_i w_{t-1}^i exp(incremental_i): this step's contribution to log Z.
  double log_increment = 0.0;
};

[[nodiscard]] double log_sum_exp(std::span<const double> values);

/// Combines incremental log-weights with the previous normalized log-weights
/// (uniform when `previous_log_weights` is empty) entirely in the log domain.
///
/// \throws AllWeightsZero (carrying `t`) when every combined log-weight is -inf.
/// \throws NumericalError on a NaN log-weight.
[[nodiscard]] NormalizedWeights normalize_and_accumulate(std::span<const double> incremental_log_weights,
                                                         std::span<const double> previous_log_weights = {},
                                                         std::size_t t = 0);

/// Effective sample size 1 / sum w^2 of normalized weights.
[[nodiscard]] double ess(std::span<const double> weights);

/// Systematic resampling with offset u/N, u in [0, 1): ancestors of the
/// positions (u + k)/N, k = 0..N-1, in the cumulative weights.
[[nodiscard]] std::vector<std::size_t> systematic_resample(std::span<const double> weights, double u);
/// Draws u from `rng`.
[[nodiscard]] std::vector<std::size_t> systematic_resample(std::span<const double> weights, RandomStream& rng);

/// Replaces particles by their ancestors and resets the weights to 1/N.
void resample(ParticleEnsemble& ensemble, std::span<const std::size_t> ancestors);

/// N particles drawn from `prior` at t = 0 with uniform weights.
[[nodiscard]] ParticleEnsemble initialize_ensemble(const GaussianParams& prior, std::size_t n,
                                                   const kernels::StreamKeys& keys, Backend backend);

/// Closed-form second stage for a linear-Gaussian update x = x0 + u,
/// u ~ N(0, P), y = C x + e, e ~ N(0, R):
///   innovation = R + C P C^T,
///   gain       = P C^T innovation^-1,
///   move       = P - gain innovation gain^T   (the conditional covariance).
struct ConjugateUpdate {
  GaussianParams innovation;  ///< N(0, R + C P C^T)
  Matrix gain;
  GaussianParams move;  ///< N(0, conditional covariance)
};

/// \throws NotPositiveDefinite when the innovation or move covariance cannot be factorized, and
/// NumericalError when the prior covariance is not finite.
[[nodiscard]] ConjugateUpdate conjugate_update(const Matrix& prior_cov, const Matrix& observation,
                                               const Matrix& obs_cov);

/// S for the given policy. WeightedSampleCov uses the intermediate states and
/// the ensemble's current normalized weights; on DegenerateWeights it falls
/// back to 1e-12 I.
[[nodiscard]] Matrix artificial_cov(const CovPolicy& policy, const ParticleEnsemble& ensemble, std::size_t obs_dim,
                                    Backend backend = Backend::Reference);

/// Bootstrap step from an ensemble at t-1 (already resampled if required).
[[nodiscard]] ParticleEnsemble bootstrap_step(const Model& model, const ParticleEnsemble& ensemble, const Vector& y,
                                              const kernels::StreamKeys& keys, Backend backend);

/// CAPF step using config.eps and config.cov_policy.
[[nodiscard]] ParticleEnsemble capf_step(const Model& model, const ParticleEnsemble& ensemble, const Vector& y,
                                         const FilterConfig& config, const kernels::StreamKeys& keys);

/// Locally optimal step. \throws std::invalid_argument unless the model has additive Gaussian noise.
[[nodiscard]] ParticleEnsemble locally_optimal_step(const Model& model, const ParticleEnsemble& ensemble,
                                                    const Vector& y, const kernels::StreamKeys& keys,
                                                    Backend backend);

struct FilterOutput {
  double log_z = 0.0;
  std::vector<double> ess_trace;
  std::vector<Vector> filtered_means;
  std::optional<ParticleEnsemble> final_ensemble;

  /// +inf for an empty trace.
  [[nodiscard]] double min_ess() const;
  [[nodiscard]] bool degenerate() const { return min_ess() < kDegeneracyThreshold; }
};

/// Filters y_1..y_T starting from particles drawn from `prior` (the law of x_0).
///
/// Each step: resample (per config, skipped at t = 1 where weights are
/// uniform), propagate and weight with the chosen proposal, normalize and
/// accumulate log Z, record the ESS and the filtered mean sum_i w_i x_t^i.
///
/// \throws AllWeightsZero with the failing t.
[[nodiscard]] FilterOutput run_filter(const Model& model, std::span<const Vector> observations,
                                      const GaussianParams& prior, ProposalKind proposal, const FilterConfig& config);

[[nodiscard]] std::string_view to_string(ProposalKind kind);
[[nodiscard]] std::string_view to_string(CovPolicyKind kind);
/// \throws std::invalid_argument on an unknown label.
[[nodiscard]] ProposalKind parse_proposal(std::string_view label);
[[nodiscard]] CovPolicyKind parse_cov_policy(std::string_view label);

/// CSV `t,ess,mean_0..mean_{d-1}` followed by a `# {...}` JSON footer holding
/// log Z, the configuration and the degeneracy flag.
void write_filter_csv(std::ostream& out, const FilterOutput& output, ProposalKind proposal,
                      const FilterConfig& config);

}  // namespace capf

#endif  // CAPF_SMC_HPP
