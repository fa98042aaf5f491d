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

#include <algorithm>
#include <atomic>
#include <fstream>
#include <istream>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>

#include "capf/csv.hpp"
#include "capf/error.hpp"
#include "capf/experiment.hpp"

namespace capf {

namespace {

constexpr std::uint64_t kTrajectoryKey = 0x7472616aULL;
constexpr std::uint64_t kRunKey = 0x72756eULL;
constexpr const char* kBaselinesHeader = "baseline,shape,eps,logz,mse";
constexpr const char* kErrorsHeader = "eps_index,eps,variant,replication,seed,message";

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write '" + path.string() + "'");
  }
  return out;
}

std::string sanitize(std::string message) {
  std::replace_if(message.begin(), message.end(), [](char c) { return c == ',' || c == '\n' || c == '\r'; }, ' ');
  return message;
}

Matrix observed_block_shape(std::size_t state_dim, std::size_t obs_dim) {
  Matrix shape = Matrix::Zero(static_cast<Eigen::Index>(state_dim), static_cast<Eigen::Index>(state_dim));
  shape.topLeftCorner(static_cast<Eigen::Index>(obs_dim), static_cast<Eigen::Index>(obs_dim)).setIdentity();
  return shape;
}

double trajectory_mse(const std::vector<Vector>& means, const Trajectory& trajectory) {
  return mse(means, std::span<const Vector>(trajectory.states).subspan(1));
}

/// Outcome of one run: either a record or an error.
struct Outcome {
  std::optional<RunRecord> record;
  std::optional<RunError> error;
};

}  // namespace

Model build_model(const ExperimentConfig& config) {
  switch (config.model) {
    case ModelKind::LgssmStandard:
      return lgssm_standard(config.lgssm_dim);
    case ModelKind::Lorenz96Standard:
      return lorenz96_standard();
  }
  throw std::logic_error("build_model: unknown model kind");
}

Trajectory experiment_trajectory(const ExperimentConfig& config, const Model& model) {
  return simulate_finite(model, config.steps, derive_seed(config.base_seed, {kTrajectoryKey}));
}

std::uint64_t run_seed(std::uint64_t base_seed, std::size_t eps_index, std::size_t replication) {
  return derive_seed(base_seed, {kRunKey, eps_index, replication});
}

std::string RunTask::label() const {
  return std::string(proposal == ProposalKind::Capf ? to_string(cov_policy) : to_string(proposal));
}

std::vector<RunTask> plan_runs(const ExperimentConfig& config) {
  const auto grid = config.eps_grid.values();
  std::vector<RunTask> tasks;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    for (const auto proposal : config.proposals) {
      const bool uses_eps = proposal == ProposalKind::Capf;
      if (!uses_eps && k != 0) {
        continue;
      }
      const auto policies = uses_eps ? config.cov_policies : std::vector<CovPolicyKind>{CovPolicyKind::BlockDiagonalObserved};
      for (const auto policy : policies) {
        for (std::size_t rep = 0; rep < config.runs_per_eps; ++rep) {
          RunTask task;
          task.eps_index = k;
          task.eps = uses_eps ? grid[k] : 0.0;
          task.proposal = proposal;
          task.cov_policy = policy;
          task.replication = rep;
          task.seed = run_seed(config.base_seed, k, rep);
          tasks.push_back(task);
        }
      }
    }
  }
  return tasks;
}

FilterConfig filter_config_for(const ExperimentConfig& config, const RunTask& task) {
  FilterConfig fc;
  fc.n_particles = config.n_particles;
  fc.eps = task.eps;
  fc.cov_policy = task.cov_policy == CovPolicyKind::WeightedSampleCov ? CovPolicy::weighted_sample_cov()
                                                                      : CovPolicy::block_diagonal();
  fc.resampling = config.resampling;
  fc.seed = task.seed;
  // Runs are spread over the worker pool; each one stays single-threaded.
  fc.backend = Backend::Reference;
  return fc;
}

void write_baselines(std::ostream& out, const std::vector<BaselineRecord>& baselines) {
  out << kBaselinesHeader << '\n';
  for (const auto& b : baselines) {
    out << b.baseline << ',' << b.shape << ',' << csv::format_real(b.eps) << ',' << csv::format_real(b.log_z) << ','
        << csv::format_real(b.mse) << '\n';
  }
}

std::vector<BaselineRecord> read_baselines(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || csv::split_line(line) != csv::split_line(kBaselinesHeader)) {
    throw std::invalid_argument("read_baselines: missing or unexpected header");
  }
  std::vector<BaselineRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    const auto fields = csv::split_line(line);
    if (fields.size() != 5) {
      throw std::invalid_argument("read_baselines: malformed row at line " + std::to_string(line_no));
    }
    try {
      out.push_back({fields[0], fields[1], csv::parse_real(fields[2]), csv::parse_real(fields[3]),
                     csv::parse_real(fields[4])});
    } catch (const std::exception& e) {
      throw std::invalid_argument("read_baselines: line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

SweepResult run_sweep(const ExperimentConfig& config) {
  const Model model = build_model(config);
  SweepResult result;
  result.trajectory = experiment_trajectory(config, model);
  const auto& trajectory = result.trajectory;
  const GaussianParams prior = filter_prior(model, trajectory);

  std::filesystem::create_directories(config.out_dir);
  {
    auto out = open_output(config.out_dir / "trajectory.csv");
    write_trajectory_csv(out, trajectory);
  }

  if (const auto* spec = std::get_if<LgssmSpec>(&model)) {
    result.kf_true = kalman_filter(*spec, trajectory.observations);
    result.baselines.push_back(
        {"kf_true", "none", 0.0, result.kf_true->log_z, trajectory_mse(result.kf_true->means, trajectory)});
    const Matrix shape = observed_block_shape(spec->state_dim(), spec->obs_dim());
    for (const double eps : config.eps_grid.values()) {
      const auto kf = kalman_filter_augmented(*spec, eps, shape, trajectory.observations);
      result.baselines.push_back({"kf_augmented", std::string(to_string(CovPolicyKind::BlockDiagonalObserved)), eps,
                                  kf.log_z, trajectory_mse(kf.means, trajectory)});
    }
  }
  {
    auto out = open_output(config.out_dir / "baselines.csv");
    write_baselines(out, result.baselines);
  }

  const auto tasks = plan_runs(config);
  std::vector<std::optional<Outcome>> outcomes(tasks.size());
  auto records_out = open_output(config.out_dir / "records.csv");
  auto errors_out = open_output(config.out_dir / "errors.csv");
  write_records_header(records_out);
  records_out.flush();
  errors_out << kErrorsHeader << '\n';
  errors_out.flush();

  std::mutex writer_mutex;
  std::size_t next_to_write = 0;
  std::atomic<std::size_t> next_task{0};

  const auto flush_ready = [&] {
    while (next_to_write < tasks.size() && outcomes[next_to_write].has_value()) {
      auto& outcome = *outcomes[next_to_write];
      if (outcome.record) {
        write_record(records_out, *outcome.record);
        records_out.flush();
        result.records.push_back(std::move(*outcome.record));
      } else {
        const auto& e = *outcome.error;
        errors_out << e.task.eps_index << ',' << csv::format_real(e.task.eps) << ',' << e.task.label() << ','
                   << e.task.replication << ',' << e.task.seed << ',' << sanitize(e.message) << '\n';
        errors_out.flush();
        result.errors.push_back(std::move(*outcome.error));
      }
      outcomes[next_to_write].reset();
      ++next_to_write;
    }
  };

  const auto worker = [&] {
    for (;;) {
      const auto i = next_task.fetch_add(1);
      if (i >= tasks.size()) {
        return;
      }
      const auto& task = tasks[i];
      Outcome outcome;
      try {
        const auto fc = filter_config_for(config, task);
        const auto output = run_filter(model, trajectory.observations, prior, task.proposal, fc);
        RunRecord r;
        r.eps = task.eps;
        r.cov_policy = task.label();
        r.seed = task.seed;
        r.log_z = output.log_z;
        r.mse = trajectory_mse(output.filtered_means, trajectory);
        r.min_ess = output.min_ess();
        r.degenerate = classify_degenerate(output.ess_trace);
        outcome.record = std::move(r);
      } catch (const std::exception& e) {
        outcome.error = RunError{task, e.what()};
      }
      std::lock_guard lock(writer_mutex);
      outcomes[i] = std::move(outcome);
      flush_ready();
    }
  };

  const auto n_workers = std::max<std::size_t>(1, std::min(config.workers, tasks.size()));
  std::vector<std::jthread> pool;
  pool.reserve(n_workers);
  for (std::size_t w = 0; w < n_workers; ++w) {
    pool.emplace_back(worker);
  }
  pool.clear();
  return result;
}

}  // namespace capf
