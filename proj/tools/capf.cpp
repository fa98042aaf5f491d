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

// Command-line front end: simulate, filter, sweep, figures.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "capf/error.hpp"
#include "capf/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool needs_config) {
  auto* opt = cmd->add_option("--config", flags.config, "experiment config (JSON)");
  if (needs_config) {
    opt->required()->check(CLI::ExistingFile);
  }
  cmd->add_option("--out", flags.out, "output directory (overrides out_dir)");
  cmd->add_option("--seed", flags.seed, "base seed (overrides base_seed)");
  cmd->add_option("--workers", flags.workers, "worker threads (overrides workers)")->check(CLI::PositiveNumber);
}

capf::ExperimentConfig resolve(const CommonFlags& flags) {
  auto config = capf::load_config(flags.config);
  if (!flags.out.empty()) {
    config.out_dir = flags.out;
  }
  if (flags.seed) {
    config.base_seed = *flags.seed;
  }
  if (flags.workers) {
    config.workers = *flags.workers;
  }
  return config;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write '" + path.string() + "'");
  }
  return out;
}

int cmd_simulate(const CommonFlags& flags) {
  const auto config = resolve(flags);
  const auto model = capf::build_model(config);
  const auto trajectory = capf::experiment_trajectory(config, model);
  const auto path = config.out_dir / "trajectory.csv";
  auto out = open_for_write(path);
  capf::write_trajectory_csv(out, trajectory);
  std::cout << "wrote " << path.string() << '\n';
  return kExitOk;
}

int cmd_filter(const CommonFlags& flags, double eps, const std::string& proposal_label, const std::string& policy_label,
               std::size_t replication) {
  auto config = resolve(flags);
  const auto model = capf::build_model(config);
  const auto trajectory = capf::experiment_trajectory(config, model);

  capf::RunTask task;
  task.eps = eps;
  task.proposal = proposal_label.empty() ? config.proposals.front() : capf::parse_proposal(proposal_label);
  task.cov_policy = policy_label.empty() ? (config.cov_policies.empty() ? capf::CovPolicyKind::BlockDiagonalObserved
                                                                        : config.cov_policies.front())
                                         : capf::parse_cov_policy(policy_label);
  if (task.cov_policy == capf::CovPolicyKind::FixedMatrix) {
    throw capf::ValidationError("--policy: fixed is not available from the command line");
  }
  task.replication = replication;
  task.seed = capf::run_seed(config.base_seed, 0, replication);
  auto fc = capf::filter_config_for(config, task);
  fc.backend = capf::Backend::OpenMP;

  const auto output = capf::run_filter(model, trajectory.observations, capf::filter_prior(model, trajectory),
                                       task.proposal, fc);
  const auto path = config.out_dir / "filter.csv";
  auto out = open_for_write(path);
  capf::write_filter_csv(out, output, task.proposal, fc);
  std::cout << "logZ " << output.log_z << "  min ESS " << output.min_ess() << "\nwrote " << path.string() << '\n';
  return kExitOk;
}

int cmd_sweep(const CommonFlags& flags) {
  const auto config = resolve(flags);
  const auto result = capf::run_sweep(config);
  std::cout << result.records.size() << " runs recorded, " << result.errors.size() << " failed\n";
  if (!result.records.empty()) {
    const auto files = capf::emit_figures(result.records, result.baselines, config.out_dir);
    std::cout << files.size() << " figure files written to " << config.out_dir.string() << '\n';
  }
  return kExitOk;
}

int cmd_figures(const std::string& records_path, const std::string& baselines_path, const std::string& out_dir) {
  std::ifstream records_in(records_path, std::ios::binary);
  if (!records_in) {
    throw std::runtime_error("cannot read '" + records_path + "'");
  }
  const auto records = capf::read_records(records_in);
  std::vector<capf::BaselineRecord> baselines;
  if (!baselines_path.empty()) {
    std::ifstream in(baselines_path, std::ios::binary);
    if (!in) {
      throw std::runtime_error("cannot read '" + baselines_path + "'");
    }
    baselines = capf::read_baselines(in);
  }
  const auto files = capf::emit_figures(records, baselines, out_dir);
  for (const auto& f : files) {
    std::cout << "wrote " << f.string() << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Particle filters with conjugate artificial process noise"};
  app.require_subcommand(1);

  CommonFlags simulate_flags;
  auto* simulate = app.add_subcommand("simulate", "simulate the experiment trajectory and write trajectory.csv");
  add_common(simulate, simulate_flags, true);

  CommonFlags filter_flags;
  double eps = 0.0;
  std::string proposal;
  std::string policy;
  std::size_t replication = 0;
  auto* filter = app.add_subcommand("filter", "run one filter on the experiment trajectory and write filter.csv");
  add_common(filter, filter_flags, true);
  filter->add_option("--eps", eps, "artificial noise scale")->check(CLI::NonNegativeNumber);
  filter->add_option("--proposal", proposal, "bootstrap | capf | locally_optimal (default: first in config)");
  filter->add_option("--policy", policy, "block_diagonal | weighted_sample_cov (default: first in config)");
  filter->add_option("--replication", replication, "replication index used to derive the run seed");

  CommonFlags sweep_flags;
  auto* sweep = app.add_subcommand("sweep", "run the full eps sweep, then render figures");
  add_common(sweep, sweep_flags, true);

  std::string records_path;
  std::string baselines_path;
  std::string figures_out = ".";
  auto* figures = app.add_subcommand("figures", "render figures from a records CSV");
  figures->add_option("--records", records_path, "records.csv from a sweep")->required()->check(CLI::ExistingFile);
  figures->add_option("--baselines", baselines_path, "baselines.csv from a sweep")->check(CLI::ExistingFile);
  figures->add_option("--out", figures_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*simulate) {
      return cmd_simulate(simulate_flags);
    }
    if (*filter) {
      return cmd_filter(filter_flags, eps, proposal, policy, replication);
    }
    if (*sweep) {
      return cmd_sweep(sweep_flags);
    }
    return cmd_figures(records_path, baselines_path, figures_out);
  } catch (const capf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const capf::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}
