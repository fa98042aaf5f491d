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
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include <json.hpp>

#include "capf/error.hpp"
#include "capf/experiment.hpp"

namespace capf {

namespace {

using Json = nlohmann::json;

std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

Json parse_strict(std::string_view text) {
  std::vector<std::set<std::string>> open_objects;
  const Json::parser_callback_t reject_duplicates = [&](int /*depth*/, Json::parse_event_t event, Json& parsed) {
    switch (event) {
      case Json::parse_event_t::object_start:
        open_objects.emplace_back();
        break;
      case Json::parse_event_t::object_end:
        open_objects.pop_back();
        break;
      case Json::parse_event_t::key: {
        auto key = parsed.get<std::string>();
        if (!open_objects.back().insert(key).second) {
          throw ParseError("config: duplicate key '" + key + "'");
        }
        break;
      }
      default:
        break;
    }
    return true;
  };
  try {
    return Json::parse(text.begin(), text.end(), reject_duplicates);
  } catch (const Json::parse_error& e) {
    throw ParseError("config: syntax error at line " + std::to_string(line_of(text, e.byte)) + ": " + e.what());
  }
}

void reject_unknown_keys(const Json& object, const std::string& where, std::initializer_list<std::string_view> known) {
  for (const auto& item : object.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      throw ParseError("config: unknown key '" + where + item.key() + "'");
    }
  }
}

const Json& require_object(const Json& value, const std::string& field) {
  if (!value.is_object()) {
    throw ParseError("config: field '" + field + "' must be an object");
  }
  return value;
}

double get_number(const Json& value, const std::string& field) {
  if (!value.is_number()) {
    throw ParseError("config: field '" + field + "' must be a number");
  }
  return value.get<double>();
}

std::int64_t get_integer(const Json& value, const std::string& field) {
  if (!value.is_number_integer()) {
    throw ParseError("config: field '" + field + "' must be an integer");
  }
  return value.get<std::int64_t>();
}

std::string get_string(const Json& value, const std::string& field) {
  if (!value.is_string()) {
    throw ParseError("config: field '" + field + "' must be a string");
  }
  return value.get<std::string>();
}

std::vector<std::string> get_string_list(const Json& value, const std::string& field) {
  if (!value.is_array()) {
    throw ParseError("config: field '" + field + "' must be an array of strings");
  }
  std::vector<std::string> out;
  for (const auto& item : value) {
    out.push_back(get_string(item, field + "[]"));
  }
  return out;
}

std::size_t default_workers() {
  const auto n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

}  // namespace

std::vector<double> EpsGrid::values() const {
  if (!values_list.empty()) {
    return values_list;
  }
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = min;
    return out;
  }
  const double denom = static_cast<double>(count - 1);
  for (std::size_t k = 0; k < count; ++k) {
    const double frac = static_cast<double>(k) / denom;
    out[k] = spacing == Spacing::Linear ? min + (max - min) * frac
                                        : std::exp(std::log(min) + (std::log(max) - std::log(min)) * frac);
  }
  out.back() = max;
  return out;
}

ExperimentConfig parse_config(std::string_view json_text) {
  const Json root = parse_strict(json_text);
  require_object(root, "<root>");
  reject_unknown_keys(root, "", {"model", "T", "n_particles", "proposals", "cov_policies", "eps_grid", "runs_per_eps",
                                 "base_seed", "workers", "out_dir", "resampling"});

  ExperimentConfig cfg;
  std::vector<std::string> violations;
  std::int64_t lgssm_dim = 10;
  std::int64_t steps = 200;
  std::int64_t n_particles = 0;
  std::int64_t runs_per_eps = 0;
  std::int64_t workers = static_cast<std::int64_t>(default_workers());
  std::int64_t count = 0;

  if (!root.contains("model")) {
    throw ParseError("config: missing required field 'model'");
  }
  const Json& model = require_object(root.at("model"), "model");
  reject_unknown_keys(model, "model.", {"kind", "dim"});
  if (!model.contains("kind")) {
    throw ParseError("config: missing required field 'model.kind'");
  }
  const auto kind = get_string(model.at("kind"), "model.kind");
  if (kind == "lgssm") {
    cfg.model = ModelKind::LgssmStandard;
    if (model.contains("dim")) {
      lgssm_dim = get_integer(model.at("dim"), "model.dim");
    }
  } else if (kind == "lorenz96") {
    cfg.model = ModelKind::Lorenz96Standard;
    if (model.contains("dim")) {
      throw ParseError("config: 'model.dim' is fixed to 10 for lorenz96");
    }
  } else {
    throw ParseError("config: field 'model.kind' must be \"lgssm\" or \"lorenz96\"");
  }

  // Per-model defaults.
  const bool lorenz = cfg.model == ModelKind::Lorenz96Standard;
  n_particles = lorenz ? 2000 : 1000;
  runs_per_eps = lorenz ? 5 : 1;
  if (lorenz) {
    cfg.eps_grid = EpsGrid{0.0, 2.0, 200, EpsGrid::Spacing::Linear, {}};
  }

  if (root.contains("T")) {
    steps = get_integer(root.at("T"), "T");
  }
  if (root.contains("n_particles")) {
    n_particles = get_integer(root.at("n_particles"), "n_particles");
  }
  if (root.contains("runs_per_eps")) {
    runs_per_eps = get_integer(root.at("runs_per_eps"), "runs_per_eps");
  }
  if (root.contains("workers")) {
    workers = get_integer(root.at("workers"), "workers");
  }
  if (root.contains("base_seed")) {
    const auto& seed = root.at("base_seed");
    if (!seed.is_number_unsigned()) {
      throw ParseError("config: field 'base_seed' must be a non-negative integer");
    }
    cfg.base_seed = seed.get<std::uint64_t>();
  }
  if (root.contains("out_dir")) {
    cfg.out_dir = get_string(root.at("out_dir"), "out_dir");
  }
  if (root.contains("proposals")) {
    cfg.proposals.clear();
    for (const auto& label : get_string_list(root.at("proposals"), "proposals")) {
      try {
        cfg.proposals.push_back(parse_proposal(label));
      } catch (const std::invalid_argument&) {
        throw ParseError("config: field 'proposals' has unknown entry '" + label + "'");
      }
    }
  }
  if (root.contains("cov_policies")) {
    cfg.cov_policies.clear();
    for (const auto& label : get_string_list(root.at("cov_policies"), "cov_policies")) {
      if (label != to_string(CovPolicyKind::BlockDiagonalObserved) &&
          label != to_string(CovPolicyKind::WeightedSampleCov)) {
        throw ParseError("config: field 'cov_policies' has unknown entry '" + label +
                         "' (expected block_diagonal or weighted_sample_cov)");
      }
      cfg.cov_policies.push_back(parse_cov_policy(label));
    }
  }
  if (root.contains("eps_grid")) {
    const Json& grid = root.at("eps_grid");
    if (grid.is_array()) {
      cfg.eps_grid.values_list.clear();
      for (const auto& v : grid) {
        cfg.eps_grid.values_list.push_back(get_number(v, "eps_grid[]"));
      }
      if (cfg.eps_grid.values_list.empty()) {
        violations.emplace_back("eps_grid: explicit list must not be empty");
      }
      for (const double v : cfg.eps_grid.values_list) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
          violations.emplace_back("eps_grid[]: every value must be finite and >= 0");
          break;
        }
      }
    } else {
      require_object(grid, "eps_grid");
      reject_unknown_keys(grid, "eps_grid.", {"min", "max", "count", "spacing"});
      count = static_cast<std::int64_t>(cfg.eps_grid.count);
      if (grid.contains("min")) {
        cfg.eps_grid.min = get_number(grid.at("min"), "eps_grid.min");
      }
      if (grid.contains("max")) {
        cfg.eps_grid.max = get_number(grid.at("max"), "eps_grid.max");
      }
      if (grid.contains("count")) {
        count = get_integer(grid.at("count"), "eps_grid.count");
      }
      if (grid.contains("spacing")) {
        const auto spacing = get_string(grid.at("spacing"), "eps_grid.spacing");
        if (spacing == "linear") {
          cfg.eps_grid.spacing = EpsGrid::Spacing::Linear;
        } else if (spacing == "log") {
          cfg.eps_grid.spacing = EpsGrid::Spacing::Log;
        } else {
          throw ParseError("config: field 'eps_grid.spacing' must be \"linear\" or \"log\"");
        }
      }
      if (!(cfg.eps_grid.min >= 0.0)) {
        violations.emplace_back("eps_grid.min: must be >= 0");
      }
      if (!(cfg.eps_grid.max >= cfg.eps_grid.min)) {
        violations.emplace_back("eps_grid.max: must be >= eps_grid.min");
      }
      if (count < 1) {
        violations.emplace_back("eps_grid.count: must be >= 1");
      } else {
        cfg.eps_grid.count = static_cast<std::size_t>(count);
      }
      if (cfg.eps_grid.spacing == EpsGrid::Spacing::Log && !(cfg.eps_grid.min > 0.0)) {
        violations.emplace_back("eps_grid.min: log spacing needs min > 0");
      }
    }
  }
  if (root.contains("resampling")) {
    const Json& rs = require_object(root.at("resampling"), "resampling");
    reject_unknown_keys(rs, "resampling.", {"kind", "threshold"});
    const auto rkind = rs.contains("kind") ? get_string(rs.at("kind"), "resampling.kind") : std::string("every_step");
    if (rkind == "every_step") {
      cfg.resampling = ResamplingRule::every_step();
      if (rs.contains("threshold")) {
        throw ParseError("config: 'resampling.threshold' only applies to adaptive resampling");
      }
    } else if (rkind == "adaptive") {
      const double threshold = rs.contains("threshold") ? get_number(rs.at("threshold"), "resampling.threshold") : 0.5;
      cfg.resampling = ResamplingRule::adaptive(threshold);
      if (!(threshold > 0.0 && threshold <= 1.0)) {
        violations.emplace_back("resampling.threshold: must lie in (0, 1]");
      }
    } else {
      throw ParseError("config: field 'resampling.kind' must be \"every_step\" or \"adaptive\"");
    }
  }

  if (cfg.model == ModelKind::LgssmStandard && (lgssm_dim < 2 || lgssm_dim % 2 != 0)) {
    violations.emplace_back("model.dim: must be even and >= 2");
  }
  if (steps < 1) {
    violations.emplace_back("T: must be >= 1");
  }
  if (n_particles < 2) {
    violations.emplace_back("n_particles: must be >= 2");
  }
  if (runs_per_eps < 1) {
    violations.emplace_back("runs_per_eps: must be >= 1");
  }
  if (workers < 1) {
    violations.emplace_back("workers: must be >= 1");
  }
  if (cfg.proposals.empty()) {
    violations.emplace_back("proposals: must not be empty");
  }
  const bool has_capf = std::find(cfg.proposals.begin(), cfg.proposals.end(), ProposalKind::Capf) != cfg.proposals.end();
  if (has_capf && cfg.cov_policies.empty()) {
    violations.emplace_back("cov_policies: capf needs at least one policy");
  }
  if (lorenz && std::find(cfg.proposals.begin(), cfg.proposals.end(), ProposalKind::LocallyOptimal) !=
                    cfg.proposals.end()) {
    violations.emplace_back("proposals: locally_optimal needs additive Gaussian noise, which lorenz96 lacks");
  }

  if (!violations.empty()) {
    std::string message = "config: " + std::to_string(violations.size()) + " violation(s): ";
    for (std::size_t i = 0; i < violations.size(); ++i) {
      message += (i == 0 ? "" : "; ") + violations[i];
    }
    throw ValidationError(message);
  }

  cfg.lgssm_dim = static_cast<std::size_t>(lgssm_dim);
  cfg.steps = static_cast<std::size_t>(steps);
  cfg.n_particles = static_cast<std::size_t>(n_particles);
  cfg.runs_per_eps = static_cast<std::size_t>(runs_per_eps);
  cfg.workers = static_cast<std::size_t>(workers);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("config: cannot read '" + path.string() + "'");
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

}  // namespace capf
