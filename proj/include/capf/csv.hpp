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

#ifndef CAPF_CSV_HPP
#define CAPF_CSV_HPP

#include <string>
#include <string_view>
#include <vector>

namespace capf::csv {

/// 17 significant digits, '.' separator; NaN as "nan", infinities as "inf"/"-inf".
[[nodiscard]] std::string format_real(double value);

/// Inverse of format_real. \throws std::invalid_argument on garbage.
[[nodiscard]] double parse_real(std::string_view text);

/// Splits one line on commas. Fields never contain commas or quotes here.
[[nodiscard]] std::vector<std::string> split_line(std::string_view line);

}  // namespace capf::csv

#endif  // CAPF_CSV_HPP
