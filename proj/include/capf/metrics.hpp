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

#ifndef CAPF_METRICS_HPP
#define CAPF_METRICS_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "capf/linalg.hpp"

namespace capf {

/// One filter run of a sweep. `degenerate` holds iff min_ess < 2.
struct RunRecord {
  double eps = 0.0;
  std::string cov_policy;
  std::uint64_t seed = 0;
  double log_z = 0.0;
  double mse = 0.0;
  double min_ess = 0.0;
  bool degenerate = false;
};

/// Mean over all time steps and coordinates of (mean - truth)^2.
[[nodiscard]] double mse(std::span<const Vector> filtered_means, std::span<const Vector> truth);

/// True iff the trace ever drops strictly below 2.
[[nodiscard]] bool classify_degenerate(std::span<const double> ess_trace);

/// Fraction of degenerate runs in equal-width eps bins.
struct BinnedDegeneracy {
  std::vector<double> bin_edges;  ///< n_bins + 1 edges.
  std::vector<double> probabilities;  ///< NaN for empty bins.
  std::vector<std::size_t> counts;
  std::vector<std::size_t> degenerate_counts;
};

/// Bins records by eps over [eps_min, eps_max]; eps_max falls in the last bin.
/// Records outside the range are not counted.
[[nodiscard]] BinnedDegeneracy bin_degeneracy(std::span<const RunRecord> records, std::size_t n_bins,
                                              double eps_min, double eps_max);

struct JensenGap {
  double mean_gap = 0.0;  ///< mean(log Z_hat) - log Z
  double variance = 0.0;  ///< sample variance of log Z_hat
  double predicted_gap = 0.0;  ///< -variance / 2
  double standard_error = 0.0;  ///< of mean_gap
};

/// Compares the observed bias of log Z estimates with the log-normal
/// prediction -sigma^2 / 2. \throws std::invalid_argument for fewer than 30 estimates.
[[nodiscard]] JensenGap jensen_gap_check(std::span<const double> log_z_estimates, double log_z_true);

/// Header `eps,cov_policy,seed,logz,mse,min_ess,degenerate`.
void write_records_header(std::ostream& out);
void write_record(std::ostream& out, const RunRecord& record);
/// \throws std::invalid_argument on a malformed header or row.
[[nodiscard]] std::vector<RunRecord> read_records(std::istream& in);

}  // namespace capf

#endif  // CAPF_METRICS_HPP
