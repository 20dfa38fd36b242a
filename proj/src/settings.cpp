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

#include "riskstrat/settings.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "riskstrat/error.hpp"

namespace riskstrat {

const char* to_string(Estimand e) noexcept { return e == Estimand::ate ? "ATE" : "ATT"; }
const char* to_string(TieMethod t) noexcept { return t == TieMethod::efron ? "efron" : "breslow"; }

std::vector<std::string> StudySettings::problems() const {
  std::vector<std::string> out;
  if (risk_strata_count < 2) out.push_back("risk_strata_count must be >= 2");
  if (ps_strata_count < 1) out.push_back("ps_strata_count must be >= 1");
  if (cv_folds < 2) out.push_back("cv_folds must be >= 2");
  if (!(caliper > 0.0)) out.push_back("caliper must be > 0");
  if (time_at_risk_days < 1) out.push_back("time_at_risk_days must be >= 1");
  if (min_events < 1) out.push_back("min_events must be >= 1");
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] > 0.0) || !std::isfinite(lambda_grid[i])) {
      out.push_back("lambda_grid values must be finite and > 0");
      break;
    }
    if (i > 0 && !(lambda_grid[i] < lambda_grid[i - 1])) {
      out.push_back("lambda_grid must be strictly decreasing");
      break;
    }
  }
  std::set<OutcomeId> outcomes(outcome_ids.begin(), outcome_ids.end());
  if (outcomes.size() != outcome_ids.size()) out.push_back("outcome_ids contains duplicates");
  std::set<OutcomeId> controls(negative_control_ids.begin(), negative_control_ids.end());
  if (controls.size() != negative_control_ids.size())
    out.push_back("negative_control_ids contains duplicates");
  for (auto id : controls)
    if (outcomes.count(id)) {
      out.push_back("outcome_ids and negative_control_ids overlap (id " + std::to_string(id) + ")");
      break;
    }
  if (!(max_smd > 0.0)) out.push_back("max_smd must be > 0");
  if (equipoise_threshold < 0.0 || equipoise_threshold > 1.0)
    out.push_back("equipoise_threshold must lie in [0, 1]");
  if (!(nc_alpha > 0.0 && nc_alpha < 1.0)) out.push_back("nc_alpha must lie in (0, 1)");
  if (nc_max_significant_fraction < 0.0 || nc_max_significant_fraction > 1.0)
    out.push_back("nc_max_significant_fraction must lie in [0, 1]");
  return out;
}

void StudySettings::validate() const {
  auto p = problems();
  if (p.empty()) return;
  std::string msg = "invalid study settings:";
  for (const auto& s : p) msg += "\n  - " + s;
  throw Error(ErrorCode::invalid_input, msg);
}

std::vector<double> default_lambda_grid(double lambda_max, int count, double min_ratio) {
  if (!(lambda_max > 0.0) || !std::isfinite(lambda_max)) return {1e-6};
  std::vector<double> grid(static_cast<std::size_t>(count));
  const double step = count > 1 ? std::log(min_ratio) / (count - 1) : 0.0;
  for (int i = 0; i < count; ++i) grid[static_cast<std::size_t>(i)] = lambda_max * std::exp(step * i);
  return grid;
}

}  // namespace riskstrat
