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

#ifndef CAPF_EXPERIMENT_HPP
#define CAPF_EXPERIMENT_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "capf/kalman.hpp"
#include "capf/metrics.hpp"
#include "capf/models.hpp"
#include "capf/smc.hpp"

/**
 * \file
 * \brief Epsilon sweeps: configuration, scheduling, CSV output and figures.
 *
 * A sweep simulates one trajectory from the configured model, then runs every
 * (eps, variant, replication) filter against it on a worker pool. Records
 * are written in canonical order as soon as their prefix is complete, so an
 * interrupted sweep leaves a valid partial CSV.
 */

namespace capf {

enum class ModelKind { LgssmStandard, Lorenz96Standard };

struct EpsGrid {
  enum class Spacing { Linear, Log };
  double min = 0.0;
  double max = 1.5;
  std::size_t count = 100;
  Spacing spacing = Spacing::Linear;
  /// When non-empty, used verbatim instead of (min, max, count, spacing).
  std::vector<double> values_list;

  [[nodiscard]] std::vector<double> values() const;
};

struct ExperimentConfig {
  ModelKind model = ModelKind::LgssmStandard;
  std::size_t lgssm_dim = 10;
  std::size_t steps = 200;
  std::size_t n_particles = 1000;
  std::vector<ProposalKind> proposals{ProposalKind::Capf};
  std::vector<CovPolicyKind> cov_policies{CovPolicyKind::BlockDiagonalObserved, CovPolicyKind::WeightedSampleCov};
  EpsGrid eps_grid;
  std::size_t runs_per_eps = 1;
  std::uint64_t base_seed = 0;
  std::size_t workers = 1;
  std::filesystem::path out_dir = "out";
  ResamplingRule resampling;
};

/// Strict JSON: unknown or duplicate keys and wrong types raise ParseError;
/// out-of-range values raise one ValidationError listing every violation.
/// Missing keys take per-model defaults.
[[nodiscard]] ExperimentConfig parse_config(std::string_view json_text);
/// \throws ParseError when the file cannot be read.
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);

[[nodiscard]] Model build_model(const ExperimentConfig& config);

/// The single trajectory shared by every run of an experiment.
[[nodiscard]] Trajectory experiment_trajectory(const ExperimentConfig& config, const Model& model);

/// Seed of replication `replication` at grid point `eps_index`.
[[nodiscard]] std::uint64_t run_seed(std::uint64_t base_seed, std::size_t eps_index, std::size_t replication);

/// One filter run of the sweep.
struct RunTask {
  std::size_t eps_index = 0;
  double eps = 0.0;
  ProposalKind proposal = ProposalKind::Capf;
  CovPolicyKind cov_policy = CovPolicyKind::BlockDiagonalObserved;
  std::size_t replication = 0;
  std::uint64_t seed = 0;

  /// Column value for the records CSV: the policy for CAPF, else the proposal.
  [[nodiscard]] std::string label() const;
};

/// All runs in canonical order: eps index, then variant, then replication.
/// Proposals without eps (bootstrap, locally optimal) run once per
/// replication at the first grid point and are recorded with eps = 0.
[[nodiscard]] std::vector<RunTask> plan_runs(const ExperimentConfig& config);

[[nodiscard]] FilterConfig filter_config_for(const ExperimentConfig& config, const RunTask& task);

struct RunError {
  RunTask task;
  std::string message;
};

/// Exact Kalman reference values written next to the records.
struct BaselineRecord {
  std::string baseline;  ///< "kf_true" or "kf_augmented"
  std::string shape;  ///< fixed S used by the augmented filter, "none" for kf_true
  double eps = 0.0;
  double log_z = 0.0;
  double mse = 0.0;
};

struct SweepResult {
  Trajectory trajectory;
  std::vector<RunRecord> records;
  std::vector<RunError> errors;
  /// Linear-Gaussian experiments only. The augmented filter uses S = B for
  /// every grid point; no exact filter exists for the sample-covariance shape.
  std::optional<KalmanOutput> kf_true;
  std::vector<BaselineRecord> baselines;
};

/// Runs the full sweep and writes records.csv, errors.csv, baselines.csv and
/// trajectory.csv into config.out_dir.
[[nodiscard]] SweepResult run_sweep(const ExperimentConfig& config);

/// Renders the figures for every CAPF policy present in `records` into
/// out_dir as SVG plus the CSV each SVG plots. Returns the files written.
std::vector<std::filesystem::path> emit_figures(const std::vector<RunRecord>& records,
                                                const std::vector<BaselineRecord>& baselines,
                                                const std::filesystem::path& out_dir);

void write_baselines(std::ostream& out, const std::vector<BaselineRecord>& baselines);
[[nodiscard]] std::vector<BaselineRecord> read_baselines(std::istream& in);

}  // namespace capf

#endif  // CAPF_EXPERIMENT_HPP
