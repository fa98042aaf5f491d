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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "capf/error.hpp"
#include "capf/experiment.hpp"

namespace {

namespace fs = std::filesystem;
using capf::ExperimentConfig;

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / (std::string("capf_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig small_lgssm(const fs::path& out) {
  auto cfg = capf::parse_config(R"({"model": {"kind": "lgssm", "dim": 4}, "T": 15, "n_particles": 60,
    "eps_grid": {"min": 0, "max": 1, "count": 4}, "runs_per_eps": 3, "base_seed": 5,
    "proposals": ["capf", "bootstrap"]})");
  cfg.out_dir = out;
  return cfg;
}

std::string config_error(std::string_view text) {
  try {
    (void)capf::parse_config(text);
  } catch (const capf::ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(ParseConfig, MinimalConfigTakesDefaults) {
  const auto cfg = capf::parse_config(R"({"model": {"kind": "lgssm"}})");
  EXPECT_EQ(cfg.model, capf::ModelKind::LgssmStandard);
  EXPECT_EQ(cfg.lgssm_dim, 10U);
  EXPECT_EQ(cfg.steps, 200U);
  EXPECT_EQ(cfg.n_particles, 1000U);
  EXPECT_EQ(cfg.eps_grid.spacing, capf::EpsGrid::Spacing::Linear);
  EXPECT_EQ(cfg.eps_grid.count, 100U);
  EXPECT_EQ(cfg.eps_grid.max, 1.5);
  const auto hw = std::thread::hardware_concurrency();
  EXPECT_EQ(cfg.workers, hw == 0 ? 1U : hw);
  EXPECT_EQ(cfg.resampling.kind, capf::ResamplingRule::Kind::EveryStep);
}

TEST(ParseConfig, LorenzDefaults) {
  const auto cfg = capf::parse_config(R"({"model": {"kind": "lorenz96"}})");
  EXPECT_EQ(cfg.n_particles, 2000U);
  EXPECT_EQ(cfg.eps_grid.count, 200U);
  EXPECT_EQ(cfg.eps_grid.max, 2.0);
  EXPECT_EQ(cfg.runs_per_eps, 5U);
}

TEST(ParseConfig, NegativeEpsMinNamesTheField) {
  const auto text = R"({"model": {"kind": "lgssm"}, "eps_grid": {"min": -0.1, "max": 1, "count": 3}})";
  EXPECT_THROW((void)capf::parse_config(text), capf::ValidationError);
  EXPECT_NE(config_error(text).find("eps_grid.min"), std::string::npos);
}

TEST(ParseConfig, EveryViolationIsListed) {
  const auto msg = config_error(
      R"({"model": {"kind": "lgssm", "dim": 3}, "runs_per_eps": 0, "n_particles": 1,
          "eps_grid": {"min": -1, "max": 1, "count": 0}})");
  for (const char* field : {"model.dim", "runs_per_eps", "n_particles", "eps_grid.min", "eps_grid.count"}) {
    EXPECT_NE(msg.find(field), std::string::npos) << field << " missing from: " << msg;
  }
}

TEST(ParseConfig, DuplicateKeyIsAParseError) {
  EXPECT_THROW((void)capf::parse_config(R"({"model": {"kind": "lgssm"}, "T": 10, "T": 20})"), capf::ParseError);
  EXPECT_THROW((void)capf::parse_config(R"({"model": {"kind": "lgssm", "kind": "lgssm"}})"), capf::ParseError);
}

TEST(ParseConfig, SameKeyInDifferentObjectsIsFine) {
  EXPECT_NO_THROW((void)capf::parse_config(
      R"({"model": {"kind": "lgssm"}, "resampling": {"kind": "adaptive", "threshold": 0.3}})"));
}

TEST(ParseConfig, UnknownKeyIsAParseError) {
  const auto msg = config_error(R"({"model": {"kind": "lgssm"}, "particles": 10})");
  EXPECT_NE(msg.find("particles"), std::string::npos);
  EXPECT_THROW((void)capf::parse_config(R"({"model": {"kind": "lgssm", "size": 4}})"), capf::ParseError);
}

TEST(ParseConfig, SyntaxErrorReportsTheLine) {
  const auto msg = config_error("{\n  \"model\": {\"kind\": \"lgssm\"},\n  \"T\": ,\n}");
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
}

TEST(ParseConfig, WrongTypeNamesTheField) {
  const auto msg = config_error(R"({"model": {"kind": "lgssm"}, "runs_per_eps": "five"})");
  EXPECT_NE(msg.find("runs_per_eps"), std::string::npos);
  EXPECT_THROW((void)capf::parse_config(R"({"model": {"kind": "lgssm"}, "T": 1.5})"), capf::ParseError);
}

TEST(ParseConfig, LocallyOptimalNeedsTheLinearModel) {
  EXPECT_THROW((void)capf::parse_config(R"({"model": {"kind": "lorenz96"}, "proposals": ["locally_optimal"]})"),
               capf::ValidationError);
}

TEST(ParseConfig, FixedPolicyIsNotConfigurable) {
  EXPECT_THROW((void)capf::parse_config(R"({"model": {"kind": "lgssm"}, "cov_policies": ["fixed"]})"),
               capf::ParseError);
}

TEST(ParseConfig, MissingFileIsAConfigError) {
  EXPECT_THROW((void)capf::load_config("/nonexistent/config.json"), capf::ConfigError);
}

TEST(EpsGrid, LinearLogAndExplicit) {
  capf::EpsGrid lin{0.0, 1.5, 4, capf::EpsGrid::Spacing::Linear, {}};
  EXPECT_EQ(lin.values(), (std::vector<double>{0.0, 0.5, 1.0, 1.5}));
  capf::EpsGrid log{0.01, 1.0, 3, capf::EpsGrid::Spacing::Log, {}};
  const auto lv = log.values();
  EXPECT_NEAR(lv[1], 0.1, 1e-15);
  EXPECT_EQ(lv.back(), 1.0);
  const auto cfg = capf::parse_config(R"({"model": {"kind": "lgssm"}, "eps_grid": [0.05, 1.0]})");
  EXPECT_EQ(cfg.eps_grid.values(), (std::vector<double>{0.05, 1.0}));
}

TEST(PlanRuns, CanonicalOrderAndCoverage) {
  const auto cfg = small_lgssm("unused");
  const auto tasks = capf::plan_runs(cfg);
  // 4 eps x 2 policies x 3 reps for capf, plus 3 bootstrap reps at the first grid point.
  ASSERT_EQ(tasks.size(), 4U * 2U * 3U + 3U);
  for (std::size_t i = 1; i < tasks.size(); ++i) {
    EXPECT_LE(tasks[i - 1].eps_index, tasks[i].eps_index);
  }
  std::set<std::tuple<std::size_t, std::string, std::size_t>> keys;
  for (const auto& t : tasks) {
    keys.emplace(t.eps_index, t.label(), t.replication);
    if (t.proposal == capf::ProposalKind::Bootstrap) {
      EXPECT_EQ(t.eps, 0.0);
      EXPECT_EQ(t.label(), "bootstrap");
    }
  }
  EXPECT_EQ(keys.size(), tasks.size());
}

TEST(RunSeed, ReplicationsUseDisjointStreams) {
  std::set<std::uint64_t> first_draws;
  for (std::size_t k = 0; k < 50; ++k) {
    for (std::size_t rep = 0; rep < 20; ++rep) {
      capf::RandomStream rng(capf::run_seed(7, k, rep));
      first_draws.insert(rng());
    }
  }
  EXPECT_EQ(first_draws.size(), 1000U);
  EXPECT_EQ(capf::run_seed(7, 3, 4), capf::run_seed(7, 3, 4));
  EXPECT_NE(capf::run_seed(7, 3, 4), capf::run_seed(8, 3, 4));
}

TEST(RunSweep, OutputsAreByteIdenticalAcrossRunsAndWorkerCounts) {
  TempDir dir;
  auto cfg = small_lgssm(dir.path() / "a");
  cfg.workers = 1;
  const auto first = capf::run_sweep(cfg);
  cfg.out_dir = dir.path() / "b";
  cfg.workers = 4;
  const auto second = capf::run_sweep(cfg);
  for (const char* name : {"records.csv", "errors.csv", "baselines.csv", "trajectory.csv"}) {
    EXPECT_EQ(slurp(dir.path() / "a" / name), slurp(dir.path() / "b" / name)) << name;
  }
  EXPECT_EQ(first.records.size(), capf::plan_runs(cfg).size());
  EXPECT_TRUE(first.errors.empty());
}

TEST(RunSweep, RecordsMatchDirectFilterRuns) {
  TempDir dir;
  const auto cfg = small_lgssm(dir.path());
  const auto result = capf::run_sweep(cfg);
  const auto model = capf::build_model(cfg);
  const auto tasks = capf::plan_runs(cfg);
  const auto& traj = result.trajectory;
  for (const std::size_t i : {std::size_t{0}, std::size_t{7}, tasks.size() - 1}) {
    const auto out = capf::run_filter(model, traj.observations, capf::filter_prior(model, traj), tasks[i].proposal,
                                      capf::filter_config_for(cfg, tasks[i]));
    EXPECT_EQ(result.records[i].log_z, out.log_z);
    EXPECT_EQ(result.records[i].seed, tasks[i].seed);
    EXPECT_EQ(result.records[i].degenerate, out.degenerate());
  }
  std::ifstream in(dir.path() / "records.csv");
  EXPECT_EQ(capf::read_records(in).size(), result.records.size());
}

TEST(RunSweep, KalmanBaselinesForTheLinearModel) {
  TempDir dir;
  const auto result = capf::run_sweep(small_lgssm(dir.path()));
  ASSERT_TRUE(result.kf_true.has_value());
  ASSERT_EQ(result.baselines.size(), 1U + 4U);
  EXPECT_EQ(result.baselines[0].baseline, "kf_true");
  EXPECT_EQ(result.baselines[1].log_z, result.kf_true->log_z);  // eps = 0
  std::ifstream in(dir.path() / "baselines.csv");
  const auto back = capf::read_baselines(in);
  ASSERT_EQ(back.size(), result.baselines.size());
  EXPECT_EQ(back[3].log_z, result.baselines[3].log_z);
  EXPECT_EQ(back[3].shape, "block_diagonal");
}

TEST(RunSweep, TruncatedRecordsFileStaysParseable) {
  TempDir dir;
  (void)capf::run_sweep(small_lgssm(dir.path()));
  const auto text = slurp(dir.path() / "records.csv");
  std::size_t pos = 0;
  for (int lines = 0; lines < 6; ++lines) {
    pos = text.find('\n', pos) + 1;
  }
  // A writer killed between records leaves whole lines only.
  std::istringstream partial(text.substr(0, pos));
  EXPECT_EQ(capf::read_records(partial).size(), 5U);
}

TEST(RunSweep, FailedRunsAreRecordedNotFatal) {
  TempDir dir;
  auto cfg = capf::parse_config(R"({"model": {"kind": "lgssm", "dim": 2}, "T": 5, "n_particles": 20,
    "eps_grid": [0.0], "runs_per_eps": 2, "proposals": ["capf"], "cov_policies": ["weighted_sample_cov"]})");
  cfg.out_dir = dir.path();
  const auto result = capf::run_sweep(cfg);
  EXPECT_EQ(result.records.size() + result.errors.size(), 2U);
  const auto errors = slurp(dir.path() / "errors.csv");
  EXPECT_EQ(errors.substr(0, errors.find('\n')), "eps_index,eps,variant,replication,seed,message");
}

TEST(EmitFigures, WritesSvgAndCsvPerPolicy) {
  TempDir dir;
  const auto result = capf::run_sweep(small_lgssm(dir.path()));
  const auto files = capf::emit_figures(result.records, result.baselines, dir.path());
  EXPECT_EQ(files.size(), 10U);
  for (const char* name : {"block_diagonal_scatter.svg", "block_diagonal_scatter_nondegenerate.svg",
                           "block_diagonal_scatter.csv", "block_diagonal_degeneracy.svg",
                           "block_diagonal_degeneracy.csv", "weighted_sample_cov_scatter.svg"}) {
    EXPECT_TRUE(fs::exists(dir.path() / name)) << name;
  }
  const auto svg = slurp(dir.path() / "block_diagonal_scatter.svg");
  EXPECT_EQ(svg.rfind("<?xml", 0), 0U);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find("stroke=\"black\""), std::string::npos);  // true Kalman reference line
  EXPECT_NE(svg.find("stroke-dasharray"), std::string::npos);  // augmented Kalman curve
  const auto csv = slurp(dir.path() / "block_diagonal_scatter.csv");
  EXPECT_NE(csv.find("\nkf_true,"), std::string::npos);
}

TEST(EmitFigures, OnlyDegenerateRunsUseTheDegenerateStyle) {
  TempDir dir;
  std::vector<capf::RunRecord> records;
  for (int k = 0; k < 5; ++k) {
    capf::RunRecord r;
    r.eps = 0.1 * k;
    r.cov_policy = "block_diagonal";
    r.log_z = -100.0 - k;
    r.mse = 0.1;
    r.min_ess = 1.0;
    r.degenerate = true;
    records.push_back(r);
  }
  (void)capf::emit_figures(records, {}, dir.path());
  const auto svg = slurp(dir.path() / "block_diagonal_scatter.svg");
  EXPECT_EQ(svg.find("<circle"), std::string::npos);
  EXPECT_NE(svg.find("#d11f1f"), std::string::npos);
}

TEST(EmitFigures, EmptyBinsLeaveGapsInTheStepPlot) {
  TempDir dir;
  std::vector<capf::RunRecord> records;
  for (const double eps : {0.0, 0.05, 1.0}) {
    capf::RunRecord r;
    r.eps = eps;
    r.cov_policy = "weighted_sample_cov";
    r.degenerate = eps < 0.5;
    records.push_back(r);
  }
  (void)capf::emit_figures(records, {}, dir.path());
  const auto csv = slurp(dir.path() / "weighted_sample_cov_degeneracy.csv");
  EXPECT_NE(csv.find(",0,0,nan\n"), std::string::npos);
  const auto svg = slurp(dir.path() / "weighted_sample_cov_degeneracy.svg");
  // Three separate runs of non-empty bins: bins 0, 5 and 99.
  std::size_t paths = 0;
  for (auto p = svg.find("<path d=\"M"); p != std::string::npos; p = svg.find("<path d=\"M", p + 1)) {
    ++paths;
  }
  EXPECT_EQ(paths, 3U);
}

TEST(EmitFigures, NoRecordsIsAnError) {
  EXPECT_THROW((void)capf::emit_figures({}, {}, "unused"), std::invalid_argument);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CAPF_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  const auto good = dir.path() / "good.json";
  const auto bad = dir.path() / "bad.json";
  std::ofstream(good) << R"({"model": {"kind": "lgssm", "dim": 2}, "T": 5, "n_particles": 30,
    "eps_grid": [0.0, 0.5], "runs_per_eps": 1, "workers": 1})";
  std::ofstream(bad) << R"({"model": {"kind": "lgssm"}, "eps_grid": {"min": -0.1}})";
  const auto out = (dir.path() / "out").string();

  EXPECT_EQ(run_cli("simulate --config " + good.string() + " --out " + out), 0);
  EXPECT_TRUE(fs::exists(dir.path() / "out" / "trajectory.csv"));
  EXPECT_EQ(run_cli("filter --config " + good.string() + " --out " + out + " --eps 0.3"), 0);
  EXPECT_TRUE(fs::exists(dir.path() / "out" / "filter.csv"));
  EXPECT_EQ(run_cli("sweep --config " + good.string() + " --out " + out + " --seed 3 --workers 2"), 0);
  EXPECT_TRUE(fs::exists(dir.path() / "out" / "records.csv"));
  EXPECT_EQ(run_cli("figures --records " + out + "/records.csv --baselines " + out + "/baselines.csv --out " + out +
                    "/fig"),
            0);
  EXPECT_TRUE(fs::exists(dir.path() / "out" / "fig" / "block_diagonal_scatter.svg"));

  EXPECT_EQ(run_cli("sweep --config " + bad.string()), 1);
  EXPECT_EQ(run_cli("sweep --config " + (dir.path() / "missing.json").string()), 1);
  EXPECT_EQ(run_cli("no-such-command"), 1);
}

TEST(Cli, NumericalFailureExitsWithTwo) {
  TempDir dir;
  const auto cfg = dir.path() / "c.json";
  std::ofstream(cfg) << R"({"model": {"kind": "lgssm", "dim": 2}, "T": 5, "n_particles": 2, "workers": 1})";
  // eps^2 overflows, so the proposal covariance is not finite.
  EXPECT_EQ(run_cli("filter --config " + cfg.string() + " --out " + (dir.path() / "o").string() + " --eps 1e200"), 2);
}

}  // namespace
