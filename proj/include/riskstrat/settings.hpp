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

#include <cstdint>
#include <string>
#include <vector>

#include "riskstrat/cohort_data.hpp"

namespace riskstrat {

enum class Estimand { ate, att };
enum class TieMethod { efron, breslow };

const char* to_string(Estimand e) noexcept;
const char* to_string(TieMethod t) noexcept;

/// Analysis knobs shared by every step of a study.
struct StudySettings {
  int risk_strata_count = 4;
  int ps_strata_count = 5;
  /// In standard deviations of the logit propensity score.
  double caliper = 0.2;
  int cv_folds = 3;
  int time_at_risk_days = 730;
  /// Descending penalty grid. Empty means a per-fit default grid.
  std::vector<double> lambda_grid;
  std::uint64_t seed = 0;
  Estimand estimand = Estimand::att;
  std::vector<OutcomeId> outcome_ids;
  std::vector<OutcomeId> negative_control_ids;

  int min_events = 25;
  /// Drop subjects censored before the horizon without an event from the
  /// risk-model development rows instead of treating them as negatives.
  bool drop_early_censored = false;
  TieMethod ties = TieMethod::efron;

  double max_smd = 0.1;
  double equipoise_threshold = 0.2;
  double nc_alpha = 0.05;
  double nc_max_significant_fraction = 0.10;

  /// Every violated constraint, empty when valid.
  std::vector<std::string> problems() const;
  /// Throws Error(invalid_input) listing all problems.
  void validate() const;
};

/// 20 log-spaced values from lambda_max down to 0.001 * lambda_max.
std::vector<double> default_lambda_grid(double lambda_max, int count = 20,
                                        double min_ratio = 1e-3);

}  // namespace riskstrat
