// Copyright 2026 The riskstrat Authors
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

#pragma once

#include <span>

namespace riskstrat {

/// Linear-interpolation quantile of sorted data.
double quantile_sorted(std::span<const double> sorted, double prob);

double normal_cdf(double z) noexcept;

/// Two-sided p-value of a standard normal statistic.
double two_sided_p(double z) noexcept;

inline constexpr double kZ975 = 1.959963984540054;

}  // namespace riskstrat
