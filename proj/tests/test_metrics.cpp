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

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "capf/kalman.hpp"
#include "capf/metrics.hpp"
#include "capf/models.hpp"
#include "oracles.hpp"

namespace {

using capf::RunRecord;
using capf::Vector;

RunRecord record(double eps, bool degenerate) {
  RunRecord r;
  r.eps = eps;
  r.cov_policy = "block_diagonal";
  r.degenerate = degenerate;
  r.min_ess = degenerate ? 1.5 : 10.0;
  return r;
}

TEST(Mse, ExactEstimateIsZero) {
  const std::vector<Vector> truth{Vector::Ones(3), Vector::Zero(3)};
  EXPECT_EQ(capf::mse(truth, truth), 0.0);
}

TEST(Mse, HandArithmetic) {
  const std::vector<Vector> truth{Vector::Zero(1), Vector::Zero(1)};
  const std::vector<Vector> means{Vector::Constant(1, 1.0), Vector::Constant(1, 3.0)};
  EXPECT_EQ(capf::mse(means, truth), 5.0);
}

TEST(Mse, RejectsMismatchedShapes) {
  const std::vector<Vector> a{Vector::Zero(2)};
  const std::vector<Vector> b{Vector::Zero(3)};
  EXPECT_THROW((void)capf::mse(a, b), std::invalid_argument);
  EXPECT_THROW((void)capf::mse(a, std::vector<Vector>{}), std::invalid_argument);
}

TEST(MseProperty, NonNegativeAndZeroOnlyForExactMeans) {
  capf::testing::Gen gen(2);
  for (int trial = 0; trial < 100; ++trial) {
    const auto d = static_cast<Eigen::Index>(gen.index(1, 5));
    std::vector<Vector> truth;
    std::vector<Vector> means;
    for (std::size_t t = 0; t < 5; ++t) {
      truth.push_back(gen.vector(d));
      means.push_back(truth.back());
    }
    EXPECT_EQ(capf::mse(means, truth), 0.0);
    means[gen.index(0, 4)][0] += 1e-3;
    EXPECT_GT(capf::mse(means, truth), 0.0);
  }
}

TEST(Mse, KalmanMeansBeatThePriorMean) {
  const auto spec = capf::lgssm_standard(10);
  std::vector<double> kf_mse;
  std::vector<double> zero_mse;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    capf::RandomStream rng(seed);
    const auto traj = capf::lgssm_simulate(spec, 100, rng);
    const std::span<const Vector> truth(traj.states.data() + 1, 100);
    kf_mse.push_back(capf::mse(capf::kalman_filter(spec, traj.observations).means, truth));
    zero_mse.push_back(capf::mse(std::vector<Vector>(100, Vector::Zero(10)), truth));
  }
  std::sort(kf_mse.begin(), kf_mse.end());
  std::sort(zero_mse.begin(), zero_mse.end());
  EXPECT_LT(kf_mse[10], zero_mse[10]);
}

TEST(ClassifyDegenerate, StrictThresholdAtTwo) {
  EXPECT_FALSE(capf::classify_degenerate(std::vector<double>(5, 100.0)));
  EXPECT_TRUE(capf::classify_degenerate(std::vector<double>{50.0, 1.0, 80.0}));
  EXPECT_FALSE(capf::classify_degenerate(std::vector<double>{50.0, 2.0, 80.0}));
  EXPECT_THROW((void)capf::classify_degenerate(std::vector<double>{}), std::invalid_argument);
}

TEST(BinDegeneracy, AllDegenerateAndNone) {
  std::vector<RunRecord> all;
  std::vector<RunRecord> none;
  for (int k = 0; k < 50; ++k) {
    all.push_back(record(0.02 * k, true));
    none.push_back(record(0.02 * k, false));
  }
  const auto a = capf::bin_degeneracy(all, 100, 0.0, 1.0);
  const auto b = capf::bin_degeneracy(none, 100, 0.0, 1.0);
  for (std::size_t k = 0; k < 100; ++k) {
    if (a.counts[k] > 0) {
      EXPECT_EQ(a.probabilities[k], 1.0);
      EXPECT_EQ(b.probabilities[k], 0.0);
    } else {
      EXPECT_TRUE(std::isnan(a.probabilities[k]));
    }
  }
}

TEST(BinDegeneracy, CountsWithinOneBin) {
  const std::vector<RunRecord> r{record(0.501, true), record(0.502, false), record(0.503, false),
                                 record(0.504, false)};
  const auto bins = capf::bin_degeneracy(r, 100, 0.0, 1.0);
  EXPECT_EQ(bins.counts[50], 4U);
  EXPECT_EQ(bins.probabilities[50], 0.25);
  EXPECT_EQ(bins.bin_edges.size(), 101U);
  EXPECT_EQ(bins.bin_edges.front(), 0.0);
  EXPECT_EQ(bins.bin_edges.back(), 1.0);
}

TEST(BinDegeneracy, UpperEdgeFallsInTheLastBin) {
  const auto bins = capf::bin_degeneracy(std::vector<RunRecord>{record(2.0, true)}, 100, 0.0, 2.0);
  EXPECT_EQ(bins.counts[99], 1U);
}

TEST(BinDegeneracyProperty, ProbabilitiesInUnitIntervalAndCountsConserved) {
  capf::testing::Gen gen(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<RunRecord> records;
    const auto n = gen.index(1, 400);
    for (std::size_t k = 0; k < n; ++k) {
      records.push_back(record(gen.uniform(-0.5, 2.5), gen.uniform(0.0, 1.0) < 0.3));
    }
    const auto bins = capf::bin_degeneracy(records, 100, 0.0, 2.0);
    std::size_t in_range = 0;
    for (const auto& r : records) {
      in_range += (r.eps >= 0.0 && r.eps <= 2.0) ? 1 : 0;
    }
    std::size_t total = 0;
    for (std::size_t k = 0; k < 100; ++k) {
      total += bins.counts[k];
      if (bins.counts[k] > 0) {
        EXPECT_GE(bins.probabilities[k], 0.0);
        EXPECT_LE(bins.probabilities[k], 1.0);
        EXPECT_EQ(bins.probabilities[k],
                  static_cast<double>(bins.degenerate_counts[k]) / static_cast<double>(bins.counts[k]));
      }
      EXPECT_NEAR(bins.bin_edges[k + 1] - bins.bin_edges[k], 0.02, 1e-12);
    }
    EXPECT_EQ(total, in_range);
  }
}

TEST(JensenGap, ZeroVarianceLimit) {
  const std::vector<double> est(30, -12.5);
  const auto gap = capf::jensen_gap_check(est, -12.5);
  EXPECT_EQ(gap.mean_gap, 0.0);
  EXPECT_EQ(gap.variance, 0.0);
  EXPECT_EQ(gap.predicted_gap, 0.0);
}

TEST(JensenGap, SyntheticLogNormalRelation) {
  capf::RandomStream rng(3);
  std::vector<double> est(10000);
  for (auto& v : est) {
    v = 4.0 + (-0.5 + rng.normal());
  }
  const auto gap = capf::jensen_gap_check(est, 4.0);
  EXPECT_NEAR(gap.mean_gap, -0.5, 0.05);
  EXPECT_NEAR(gap.predicted_gap, -0.5, 0.05);
}

TEST(JensenGap, NeedsThirtyEstimates) {
  EXPECT_THROW((void)capf::jensen_gap_check(std::vector<double>(29, 0.0), 0.0), std::invalid_argument);
}

TEST(RecordsCsv, RoundTripsExactly) {
  std::vector<RunRecord> records;
  RunRecord r;
  r.eps = 0.1 + 0.2;
  r.cov_policy = "weighted_sample_cov";
  r.seed = 18446744073709551615ULL;
  r.log_z = -1234.5678901234567;
  r.mse = 1e-300;
  r.min_ess = 1.0;
  r.degenerate = true;
  records.push_back(r);
  r.log_z = -std::numeric_limits<double>::infinity();
  r.mse = std::nan("");
  r.degenerate = false;
  records.push_back(r);

  std::stringstream io;
  capf::write_records_header(io);
  for (const auto& rec : records) {
    capf::write_record(io, rec);
  }
  EXPECT_EQ(io.str().substr(0, io.str().find('\n')), "eps,cov_policy,seed,logz,mse,min_ess,degenerate");
  const auto back = capf::read_records(io);
  ASSERT_EQ(back.size(), 2U);
  EXPECT_EQ(back[0].eps, records[0].eps);
  EXPECT_EQ(back[0].seed, records[0].seed);
  EXPECT_EQ(back[0].log_z, records[0].log_z);
  EXPECT_EQ(back[0].mse, records[0].mse);
  EXPECT_TRUE(back[0].degenerate);
  EXPECT_EQ(back[1].log_z, records[1].log_z);
  EXPECT_TRUE(std::isnan(back[1].mse));
}

TEST(RecordsCsv, MalformedInputIsRejected) {
  std::istringstream bad_header("eps,policy\n");
  EXPECT_THROW((void)capf::read_records(bad_header), std::invalid_argument);
  std::istringstream bad_row("eps,cov_policy,seed,logz,mse,min_ess,degenerate\n0.1,b,1,2,3,4,yes\n");
  EXPECT_THROW((void)capf::read_records(bad_row), std::invalid_argument);
}

}  // namespace
