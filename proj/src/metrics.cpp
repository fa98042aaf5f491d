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

#include "capf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "capf/csv.hpp"
#include "capf/smc.hpp"

namespace capf {

namespace {
constexpr const char* kRecordsHeader = "eps,cov_policy,seed,logz,mse,min_ess,degenerate";
}

double mse(std::span<const Vector> filtered_means, std::span<const Vector> truth) {
  if (filtered_means.size() != truth.size() || filtered_means.empty()) {
    throw std::invalid_argument("mse: need equally many, and at least one, estimates and true states");
  }
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    if (filtered_means[t].size() != truth[t].size()) {
      throw std::invalid_argument("mse: dimension mismatch at step " + std::to_string(t));
    }
    total += (filtered_means[t] - truth[t]).squaredNorm();
    count += static_cast<std::size_t>(truth[t].size());
  }
  return total / static_cast<double>(count);
}

bool classify_degenerate(std::span<const double> ess_trace) {
  if (ess_trace.empty()) {
    throw std::invalid_argument("classify_degenerate: empty ESS trace");
  }
  return *std::min_element(ess_trace.begin(), ess_trace.end()) < kDegeneracyThreshold;
}

BinnedDegeneracy bin_degeneracy(std::span<const RunRecord> records, std::size_t n_bins, double eps_min,
                                double eps_max) {
  if (n_bins == 0 || !(eps_max > eps_min)) {
    throw std::invalid_argument("bin_degeneracy: need n_bins > 0 and eps_max > eps_min");
  }
  BinnedDegeneracy out;
  out.bin_edges.resize(n_bins + 1);
  const double width = (eps_max - eps_min) / static_cast<double>(n_bins);
  for (std::size_t k = 0; k <= n_bins; ++k) {
    out.bin_edges[k] = eps_min + width * static_cast<double>(k);
  }
  out.bin_edges.back() = eps_max;
  out.counts.assign(n_bins, 0);
  out.degenerate_counts.assign(n_bins, 0);
  for (const auto& r : records) {
    if (!(r.eps >= eps_min && r.eps <= eps_max)) {
      continue;
    }
    auto k = static_cast<std::size_t>((r.eps - eps_min) / width);
    k = std::min(k, n_bins - 1);
    ++out.counts[k];
    if (r.degenerate) {
      ++out.degenerate_counts[k];
    }
  }
  out.probabilities.resize(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) {
    out.probabilities[k] = out.counts[k] == 0 ? std::numeric_limits<double>::quiet_NaN()
                                              : static_cast<double>(out.degenerate_counts[k]) /
                                                    static_cast<double>(out.counts[k]);
  }
  return out;
}

JensenGap jensen_gap_check(std::span<const double> log_z_estimates, double log_z_true) {
  const auto k = log_z_estimates.size();
  if (k < 30) {
    throw std::invalid_argument("jensen_gap_check: need at least 30 estimates");
  }
  double mean = 0.0;
  for (const double v : log_z_estimates) {
    mean += v;
  }
  mean /= static_cast<double>(k);
  double ss = 0.0;
  for (const double v : log_z_estimates) {
    ss += (v - mean) * (v - mean);
  }
  JensenGap out;
  out.mean_gap = mean - log_z_true;
  out.variance = ss / static_cast<double>(k - 1);
  out.predicted_gap = -0.5 * out.variance;
  out.standard_error = std::sqrt(out.variance / static_cast<double>(k));
  return out;
}

void write_records_header(std::ostream& out) { out << kRecordsHeader << '\n'; }

void write_record(std::ostream& out, const RunRecord& r) {
  out << csv::format_real(r.eps) << ',' << r.cov_policy << ',' << r.seed << ',' << csv::format_real(r.log_z) << ','
      << csv::format_real(r.mse) << ',' << csv::format_real(r.min_ess) << ',' << (r.degenerate ? 1 : 0) << '\n';
}

std::vector<RunRecord> read_records(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || csv::split_line(line) != csv::split_line(kRecordsHeader)) {
    throw std::invalid_argument("read_records: missing or unexpected header");
  }
  std::vector<RunRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    const auto fields = csv::split_line(line);
    if (fields.size() != 7 || (fields[6] != "0" && fields[6] != "1")) {
      throw std::invalid_argument("read_records: malformed row at line " + std::to_string(line_no));
    }
    RunRecord r;
    try {
      r.eps = csv::parse_real(fields[0]);
      r.cov_policy = fields[1];
      r.seed = std::stoull(fields[2]);
      r.log_z = csv::parse_real(fields[3]);
      r.mse = csv::parse_real(fields[4]);
      r.min_ess = csv::parse_real(fields[5]);
    } catch (const std::exception& e) {
      throw std::invalid_argument("read_records: line " + std::to_string(line_no) + ": " + e.what());
    }
    r.degenerate = fields[6] == "1";
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace capf
