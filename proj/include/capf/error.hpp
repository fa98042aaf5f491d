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

#ifndef CAPF_ERROR_HPP
#define CAPF_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace capf {

/// Base class for numerical failures raised by the library.
///
/// Configuration problems use ConfigError instead so the CLI can map the two
/// families onto distinct exit codes.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A matrix that had to be factorized was not positive definite, even after
/// the single diagonal jitter retry.
class NotPositiveDefinite : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Weighted covariance requested for an ensemble with one effective particle.
class DegenerateWeights : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Every log-weight was -inf: the observation is impossible under all particles.
class AllWeightsZero : public NumericalError {
 public:
  explicit AllWeightsZero(std::size_t t)
      : NumericalError("all particle weights are zero at t=" + std::to_string(t)), t_(t) {}

  [[nodiscard]] std::size_t time_index() const noexcept { return t_; }

 private:
  std::size_t t_;
};

/// An SDE discretization left the bounded region where it is trusted.
class NumericalBlowup : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration text (syntax, duplicate keys, wrong types).
class ParseError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Well-formed configuration whose values violate a constraint.
class ValidationError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

}  // namespace capf

#endif  // CAPF_ERROR_HPP
