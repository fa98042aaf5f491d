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

#include "capf/random.hpp"

namespace capf {

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = mix64(base + 0x9e3779b97f4a7c15ULL);
  std::uint64_t position = 1;
  for (const auto key : path) {
    // Position-dependent salt keeps (a, b) and (b, a) apart.
    h = mix64(h ^ mix64(key + position * 0xd1b54a32d192ed03ULL));
    ++position;
  }
  return h;
}

}  // namespace capf
