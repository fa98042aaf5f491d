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

#ifndef CAPF_RANDOM_HPP
#define CAPF_RANDOM_HPP

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>

/**
 * \file
 * \brief Seedable random streams with cheap, keyed substreams.
 *
 * Particle filters draw per particle and per time step. Drawing every
 * particle's noise from its own keyed substream makes a run independent of
 * the order in which particles are processed, so the OpenMP kernels and the
 * serial reference produce the same bits for any thread count.
 */

namespace capf {

/// Stateless 64-bit finalizer (the SplitMix64 output function).
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30U)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27U)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31U);
}

/// Hashes a base seed together with a path of keys into a new seed.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) noexcept;

/// SplitMix64 engine; satisfies UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

 private:
  std::uint64_t state_;
};

/// A random stream: an engine plus the distributions the library needs.
///
/// Streams are never shared between threads; each owner draws from its own.
class RandomStream {
 public:
  using result_type = SplitMix64::result_type;

  explicit RandomStream(std::uint64_t seed) : engine_(mix64(seed ^ 0x6a09e667f3bcc909ULL)) {}

  /// Stream keyed by `base` and an arbitrary path (e.g. stage, time, particle).
  static RandomStream substream(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
    return RandomStream(derive_seed(base, path));
  }

  static constexpr result_type min() noexcept { return SplitMix64::min(); }
  static constexpr result_type max() noexcept { return SplitMix64::max(); }
  result_type operator()() noexcept { return engine_(); }

  /// Standard normal variate.
  double normal() { return normal_(engine_); }

  /// Uniform variate on [0, 1).
  double uniform() { return uniform_(engine_); }

 private:
  SplitMix64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace capf

#endif  // CAPF_RANDOM_HPP
