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

#include <cmath>
#include <set>

#include "capf/kernels.hpp"
#include "capf/random.hpp"

namespace {

TEST(RandomStream, SameSeedSameSequence) {
  capf::RandomStream a(42);
  capf::RandomStream b(42);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(a.normal(), b.normal());
    EXPECT_EQ(a(), b());
  }
}

TEST(RandomStream, UniformStaysInUnitInterval) {
  capf::RandomStream rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(RandomStream, NormalMoments) {
  capf::RandomStream rng(2);
  const int n = 200000;
  double sum = 0.0;
  double sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(DeriveSeed, PathOrderMatters) {
  EXPECT_NE(capf::derive_seed(7, {1, 2}), capf::derive_seed(7, {2, 1}));
  EXPECT_NE(capf::derive_seed(7, {1}), capf::derive_seed(7, {1, 0}));
  EXPECT_EQ(capf::derive_seed(7, {1, 2, 3}), capf::derive_seed(7, {1, 2, 3}));
}

TEST(StreamKeys, EveryStageTimeAndParticleGetsADistinctStream) {
  const capf::kernels::StreamKeys keys(123);
  std::set<std::uint64_t> first_draws;
  std::size_t total = 0;
  for (const auto stage : {capf::kernels::Stage::Init, capf::kernels::Stage::Resample,
                           capf::kernels::Stage::Propagate, capf::kernels::Stage::Proposal}) {
    for (std::size_t t = 0; t < 20; ++t) {
      for (std::size_t i = 0; i < 50; ++i) {
        auto rng = keys.at(stage, t, i);
        first_draws.insert(rng());
        ++total;
      }
    }
  }
  EXPECT_EQ(first_draws.size(), total);
}

}  // namespace
