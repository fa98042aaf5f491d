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

#include "capf/smc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "capf/csv.hpp"
#include "capf/error.hpp"

namespace capf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_dimensions(const Model& model, std::span<const Vector> observations, const GaussianParams& prior) {
  if (prior.dim() != state_dim(model)) {
    throw std::invalid_argument("run_filter: prior dimension does not match the model state dimension");
  }
  const auto p = static_cast<Eigen::Index>(obs_dim(model));
  for (const auto& y : observations) {
    if (y.size() != p) {
      throw std::invalid_argument("run_filter: observation dimension does not match the model");
    }
  }
}

ParticleEnsemble next_ensemble(const ParticleEnsemble& ensemble) {
  ParticleEnsemble out;
  out.log_weights = ensemble.log_weights;
  out.incremental_log_weights.assign(ensemble.size(), 0.0);
  out.t = ensemble.t + 1;
  return out;
}

}  // namespace

void FilterConfig::validate() const {
  if (n_particles < 2) {
    throw std::invalid_argument("FilterConfig: need at least two particles");
  }
  if (!(eps >= 0.0) || !std::isfinite(eps)) {
    throw std::invalid_argument("FilterConfig: eps must be finite and non-negative");
  }
  if (resampling.kind == ResamplingRule::Kind::Adaptive && !(resampling.threshold > 0.0 && resampling.threshold <= 1.0)) {
    throw std::invalid_argument("FilterConfig: adaptive resampling threshold must lie in (0, 1]");
  }
  if (cov_policy.kind == CovPolicyKind::FixedMatrix && !is_symmetric(cov_policy.fixed)) {
    throw std::invalid_argument("FilterConfig: fixed artificial-noise shape must be square and symmetric");
  }
}

std::vector<double> ParticleEnsemble::weights() const {
  std::vector<double> w(log_weights.size());
  std::transform(log_weights.begin(), log_weights.end(), w.begin(), [](double lw) { return std::exp(lw); });
  return w;
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) {
    return kNegInf;
  }
  const double max = *std::max_element(values.begin(), values.end());
  if (max == kNegInf) {
    return kNegInf;
  }
  double sum = 0.0;
  for (const double v : values) {
    sum += std::exp(v - max);
  }
  return max + std::log(sum);
}

NormalizedWeights normalize_and_accumulate(std::span<const double> incremental_log_weights,
                                           std::span<const double> previous_log_weights, std::size_t t) {
  const auto n = incremental_log_weights.size();
  if (n == 0) {
    throw std::invalid_argument("normalize_and_accumulate: no particles");
  }
  if (!previous_log_weights.empty() && previous_log_weights.size() != n) {
    throw std::invalid_argument("normalize_and_accumulate: previous weights have the wrong length");
  }
  const double uniform = -std::log(static_cast<double>(n));

  NormalizedWeights out;
  out.log_weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double prev = previous_log_weights.empty() ? uniform : previous_log_weights[i];
    const double combined = prev + incremental_log_weights[i];
    if (std::isnan(combined) || combined == std::numeric_limits<double>::infinity()) {
      throw NumericalError("normalize_and_accumulate: NaN or +inf log-weight at t=" + std::to_string(t));
    }
    out.log_weights[i] = combined;
  }
  const double total = log_sum_exp(out.log_weights);
  if (total == kNegInf) {
    throw AllWeightsZero(t);
  }
  out.log_increment = total;
  out.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.log_weights[i] -= total;
    out.weights[i] = std::exp(out.log_weights[i]);
  }
  return out;
}

double ess(std::span<const double> weights) {
  double sum_sq = 0.0;
  for (const double w : weights) {
    sum_sq += w * w;
  }
  const double n = static_cast<double>(weights.size());
  return std::clamp(1.0 / sum_sq, 1.0, n);
}

std::vector<std::size_t> systematic_resample(std::span<const double> weights, double u) {
  const auto n = weights.size();
  if (n == 0) {
    throw std::invalid_argument("systematic_resample: no weights");
  }
  if (!(u >= 0.0 && u < 1.0)) {
    throw std::invalid_argument("systematic_resample: offset must lie in [0, 1)");
  }
  // Rounding in the cumulative sum must never hand a position to a trailing
  // zero-weight particle.
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (weights[i] > 0.0) {
      last_positive = i;
    }
  }
  const double dn = static_cast<double>(n);
  std::vector<std::size_t> ancestors(n);
  std::size_t j = 0;
  double cumulative = weights[0];
  for (std::size_t k = 0; k < n; ++k) {
    const double position = (u + static_cast<double>(k)) / dn;
    while (position >= cumulative && j < last_positive) {
      ++j;
      cumulative += weights[j];
    }
    ancestors[k] = j;
  }
  return ancestors;
}

std::vector<std::size_t> systematic_resample(std::span<const double> weights, RandomStream& rng) {
  return systematic_resample(weights, rng.uniform());
}

void resample(ParticleEnsemble& ensemble, std::span<const std::size_t> ancestors) {
  const auto n = ensemble.size();
  if (ancestors.size() != n) {
    throw std::invalid_argument("resample: need one ancestor per particle");
  }
  Matrix states(ensemble.states.rows(), ensemble.states.cols());
  for (std::size_t k = 0; k < n; ++k) {
    states.row(static_cast<Eigen::Index>(k)) = ensemble.states.row(static_cast<Eigen::Index>(ancestors[k]));
  }
  ensemble.states = std::move(states);
  ensemble.log_weights.assign(n, -std::log(static_cast<double>(n)));
}

ParticleEnsemble initialize_ensemble(const GaussianParams& prior, std::size_t n, const kernels::StreamKeys& keys,
                                     Backend backend) {
  ParticleEnsemble ensemble;
  ensemble.states.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(prior.dim()));
  kernels::sample_prior(backend, prior, ensemble.states, keys);
  ensemble.log_weights.assign(n, -std::log(static_cast<double>(n)));
  ensemble.incremental_log_weights.assign(n, 0.0);
  ensemble.t = 0;
  return ensemble;
}

ConjugateUpdate conjugate_update(const Matrix& prior_cov, const Matrix& observation, const Matrix& obs_cov) {
  if (!prior_cov.allFinite()) {
    throw NumericalError("conjugate_update: prior covariance is not finite");
  }
  if (!is_symmetric(prior_cov) || prior_cov.rows() != observation.cols() || obs_cov.rows() != observation.rows()) {
    throw std::invalid_argument("conjugate_update: inconsistent dimensions or non-symmetric prior covariance");
  }
  const Matrix cp = observation * prior_cov;
  Matrix innovation_cov = obs_cov + cp * observation.transpose();
  symmetrize(innovation_cov);
  GaussianParams innovation(Vector::Zero(observation.rows()), std::move(innovation_cov));

  // With L L^T = innovation and W = L^-1 C P:
  //   gain = P C^T innovation^-1 = (L^-T W)^T,  gain innovation gain^T = W^T W.
  const Matrix w = innovation.chol().triangularView<Eigen::Lower>().solve(cp);
  Matrix gain = innovation.chol().transpose().triangularView<Eigen::Upper>().solve(w).transpose();
  Matrix move_cov = prior_cov - w.transpose() * w;
  symmetrize(move_cov);
  GaussianParams move(Vector::Zero(prior_cov.rows()), std::move(move_cov));
  return {std::move(innovation), std::move(gain), std::move(move)};
}

Matrix artificial_cov(const CovPolicy& policy, const ParticleEnsemble& ensemble, std::size_t obs_dim,
                      Backend backend) {
  // Outside a CAPF step there are no intermediate states; use the states.
  const Matrix& points = ensemble.intermediate_states.size() != 0 ? ensemble.intermediate_states : ensemble.states;
  const auto d = points.cols();
  switch (policy.kind) {
    case CovPolicyKind::BlockDiagonalObserved: {
      const auto p = static_cast<Eigen::Index>(obs_dim);
      if (p > d) {
        throw std::invalid_argument("artificial_cov: more observed coordinates than state coordinates");
      }
      Matrix s = Matrix::Zero(d, d);
      s.topLeftCorner(p, p).setIdentity();
      return s;
    }
    case CovPolicyKind::WeightedSampleCov:
      try {
        return kernels::weighted_mean_cov(backend, points, ensemble.weights()).cov;
      } catch (const DegenerateWeights&) {
        return 1e-12 * Matrix::Identity(d, d);
      }
    case CovPolicyKind::FixedMatrix:
      if (policy.fixed.rows() != d || policy.fixed.cols() != d) {
        throw std::invalid_argument("artificial_cov: fixed shape must be d x d");
      }
      return policy.fixed;
  }
  throw std::logic_error("artificial_cov: unknown policy");
}

ParticleEnsemble bootstrap_step(const Model& model, const ParticleEnsemble& ensemble, const Vector& y,
                                const kernels::StreamKeys& keys, Backend backend) {
  ParticleEnsemble out = next_ensemble(ensemble);
  kernels::propagate(backend, model, ensemble.states, out.states, keys, out.t);
  kernels::observation_log_likelihood(backend, observation_matrix(model), y, observation_noise(model), out.states,
                                      out.incremental_log_weights);
  return out;
}

ParticleEnsemble capf_step(const Model& model, const ParticleEnsemble& ensemble, const Vector& y,
                           const FilterConfig& config, const kernels::StreamKeys& keys) {
  const Backend backend = config.backend;
  ParticleEnsemble out = next_ensemble(ensemble);
  kernels::propagate(backend, model, ensemble.states, out.intermediate_states, keys, out.t);
  const Matrix& c = observation_matrix(model);

  if (config.eps == 0.0) {
    // The second stage is the identity and its draws are skipped.
    out.states = out.intermediate_states;
    kernels::observation_log_likelihood(backend, c, y, observation_noise(model), out.intermediate_states,
                                        out.incremental_log_weights);
    return out;
  }

  const Matrix shape = artificial_cov(config.cov_policy, out, obs_dim(model), backend);
  const Matrix prior_cov = (config.eps * config.eps) * shape;
  const ConjugateUpdate update = conjugate_update(prior_cov, c, observation_noise(model).cov());
  kernels::observation_log_likelihood(backend, c, y, update.innovation, out.intermediate_states,
                                      out.incremental_log_weights);
  kernels::conjugate_move(backend, out.intermediate_states, c, y, update.gain, update.move, out.states, keys, out.t);
  return out;
}

ParticleEnsemble locally_optimal_step(const Model& model, const ParticleEnsemble& ensemble, const Vector& y,
                                      const kernels::StreamKeys& keys, Backend backend) {
  if (!has_additive_gaussian_noise(model)) {
    throw std::invalid_argument("locally_optimal_step: model has no additive-Gaussian form");
  }
  ParticleEnsemble out = next_ensemble(ensemble);
  Matrix predicted;
  kernels::apply_mean_dynamics(backend, model, ensemble.states, predicted);
  const Matrix& c = observation_matrix(model);
  const ConjugateUpdate update =
      conjugate_update(additive_process_noise(model).cov(), c, observation_noise(model).cov());
  kernels::observation_log_likelihood(backend, c, y, update.innovation, predicted, out.incremental_log_weights);
  kernels::conjugate_move(backend, predicted, c, y, update.gain, update.move, out.states, keys, out.t);
  return out;
}

double FilterOutput::min_ess() const {
  if (ess_trace.empty()) {
    return std::numeric_limits<double>::infinity();
  }
  return *std::min_element(ess_trace.begin(), ess_trace.end());
}

FilterOutput run_filter(const Model& model, std::span<const Vector> observations, const GaussianParams& prior,
                        ProposalKind proposal, const FilterConfig& config) {
  config.validate();
  check_dimensions(model, observations, prior);
  if (proposal == ProposalKind::LocallyOptimal && !has_additive_gaussian_noise(model)) {
    throw std::invalid_argument("run_filter: the locally optimal proposal needs additive Gaussian noise");
  }

  FilterOutput out;
  if (observations.empty()) {
    return out;
  }
  const kernels::StreamKeys keys(config.seed);
  const auto n = config.n_particles;
  const double resample_below = config.resampling.threshold * static_cast<double>(n);
  out.ess_trace.reserve(observations.size());
  out.filtered_means.reserve(observations.size());

  ParticleEnsemble ensemble = initialize_ensemble(prior, n, keys, config.backend);
  for (std::size_t t = 1; t <= observations.size(); ++t) {
    if (t > 1) {
      const auto weights = ensemble.weights();
      if (config.resampling.kind == ResamplingRule::Kind::EveryStep || ess(weights) < resample_below) {
        auto rng = keys.at(kernels::Stage::Resample, t, 0);
        resample(ensemble, systematic_resample(weights, rng));
      }
    }
    const Vector& y = observations[t - 1];
    switch (proposal) {
      case ProposalKind::Bootstrap:
        ensemble = bootstrap_step(model, ensemble, y, keys, config.backend);
        break;
      case ProposalKind::Capf:
        ensemble = capf_step(model, ensemble, y, config, keys);
        break;
      case ProposalKind::LocallyOptimal:
        ensemble = locally_optimal_step(model, ensemble, y, keys, config.backend);
        break;
    }
    auto normalized = normalize_and_accumulate(ensemble.incremental_log_weights, ensemble.log_weights, t);
    ensemble.log_weights = std::move(normalized.log_weights);
    out.log_z += normalized.log_increment;
    out.ess_trace.push_back(ess(normalized.weights));
    out.filtered_means.push_back(kernels::weighted_mean(config.backend, ensemble.states, normalized.weights));
  }
  if (config.keep_final_ensemble) {
    out.final_ensemble = std::move(ensemble);
  }
  return out;
}

std::string_view to_string(ProposalKind kind) {
  switch (kind) {
    case ProposalKind::Bootstrap:
      return "bootstrap";
    case ProposalKind::Capf:
      return "capf";
    case ProposalKind::LocallyOptimal:
      return "locally_optimal";
  }
  return "unknown";
}

std::string_view to_string(CovPolicyKind kind) {
  switch (kind) {
    case CovPolicyKind::BlockDiagonalObserved:
      return "block_diagonal";
    case CovPolicyKind::WeightedSampleCov:
      return "weighted_sample_cov";
    case CovPolicyKind::FixedMatrix:
      return "fixed";
  }
  return "unknown";
}

ProposalKind parse_proposal(std::string_view label) {
  for (const auto kind : {ProposalKind::Bootstrap, ProposalKind::Capf, ProposalKind::LocallyOptimal}) {
    if (label == to_string(kind)) {
      return kind;
    }
  }
  throw std::invalid_argument("unknown proposal '" + std::string(label) + "'");
}

CovPolicyKind parse_cov_policy(std::string_view label) {
  for (const auto kind :
       {CovPolicyKind::BlockDiagonalObserved, CovPolicyKind::WeightedSampleCov, CovPolicyKind::FixedMatrix}) {
    if (label == to_string(kind)) {
      return kind;
    }
  }
  throw std::invalid_argument("unknown covariance policy '" + std::string(label) + "'");
}

void write_filter_csv(std::ostream& out, const FilterOutput& output, ProposalKind proposal,
                      const FilterConfig& config) {
  const auto d = output.filtered_means.empty() ? 0 : output.filtered_means.front().size();
  out << "t,ess";
  for (Eigen::Index j = 0; j < d; ++j) {
    out << ",mean_" << j;
  }
  out << '\n';
  for (std::size_t t = 0; t < output.ess_trace.size(); ++t) {
    out << (t + 1) << ',' << csv::format_real(output.ess_trace[t]);
    for (Eigen::Index j = 0; j < d; ++j) {
      out << ',' << csv::format_real(output.filtered_means[t][j]);
    }
    out << '\n';
  }
  nlohmann::ordered_json footer;
  footer["logz"] = output.log_z;
  footer["proposal"] = std::string(to_string(proposal));
  footer["eps"] = config.eps;
  footer["cov_policy"] = std::string(to_string(config.cov_policy.kind));
  footer["n_particles"] = config.n_particles;
  footer["resampling"] = config.resampling.kind == ResamplingRule::Kind::EveryStep ? "every_step" : "adaptive";
  if (config.resampling.kind == ResamplingRule::Kind::Adaptive) {
    footer["threshold"] = config.resampling.threshold;
  }
  footer["seed"] = config.seed;
  const double min_ess = output.min_ess();
  footer["min_ess"] = std::isfinite(min_ess) ? nlohmann::ordered_json(min_ess) : nlohmann::ordered_json(nullptr);
  footer["degenerate"] = output.degenerate();
  out << "# " << footer.dump() << '\n';
}

}  // namespace capf
