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
#include <filesystem>
#include <map>
#include <span>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "riskstrat/cohort_data.hpp"

namespace riskstrat {

/// Exponential event-time model for one outcome. Covariate indices are
/// 1-based covariate ids.
struct OutcomeModelSpec {
  OutcomeId id = 1;
  /// log of the per-day baseline hazard.
  double baseline_log_hazard = -8.0;
  std::map<int, double> covariate_log_hazard;
  /// True log hazard ratio by quartile of true risk (lowest first). One value
  /// means constant across quartiles.
  std::vector<double> true_log_hr{0.0};
  /// Extra log hazard for treated subjects per covariate (effect modification).
  std::map<int, double> treated_log_hazard;
  /// Probability that a subject carries a pre-index record of this outcome.
  double prior_rate = 0.0;
  bool negative_control = false;
};

struct SimulationSpec {
  std::int64_t n_subjects = 1000;
  int n_binary_covariates = 10;
  /// Trailing covariates that drive the data but are not written out.
  int n_hidden_covariates = 0;
  /// One value per covariate, or a single value for all.
  std::vector<double> covariate_prevalences{0.3};
  double treatment_intercept = 0.0;
  std::map<int, double> treatment_coefficients;
  std::vector<OutcomeModelSpec> outcomes;
  /// Additional outcomes generated from `negative_control_model` with a true
  /// log hazard ratio of exactly 0, ids starting at `negative_control_first_id`.
  int negative_control_count = 0;
  OutcomeId negative_control_first_id = 1001;
  OutcomeModelSpec negative_control_model;
  /// Spread of each control's baseline log hazard around the template.
  double negative_control_baseline_spread = 0.0;
  double censoring_rate = 0.0;
  int admin_censor_day = 1095;
  int time_at_risk_days = 730;
  std::uint64_t seed = 1;

  /// Outcome models including expanded negative controls.
  std::vector<OutcomeModelSpec> all_outcomes() const;
  std::vector<OutcomeId> negative_control_ids() const;
  double prevalence(int covariate) const;
  void validate() const;
};

SimulationSpec simulation_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SimulationSpec& spec);

/// Ground truth per (subject, outcome).
struct TruthRow {
  SubjectId subject = 0;
  OutcomeId outcome = 0;
  /// Risk over the time-at-risk window without treatment.
  double true_risk = 0.0;
  double true_log_hr = 0.0;
};

struct TruthRecord {
  std::vector<TruthRow> rows;  // ascending (subject, outcome)
  /// Full covariate rows including hidden covariates, index 0 = covariate 1.
  std::map<SubjectId, std::vector<char>> latent_covariates;

  const TruthRow* find(SubjectId subject, OutcomeId outcome) const;
};

struct Simulation {
  CovariateTable covariates;
  CohortTable cohort;
  TruthRecord truth;
};

Simulation simulate(const SimulationSpec& spec);

/// 1 - exp(-time_at_risk * exp(baseline + gamma . x)) for one outcome, without
/// treatment. `row` holds 0/1 per covariate, index 0 = covariate 1.
double true_risk(const SimulationSpec& spec, OutcomeId outcome, std::span<const char> row);
double true_risk(const OutcomeModelSpec& model, int time_at_risk_days, std::span<const char> row);

void write_truth(const TruthRecord& truth, const std::filesystem::path& path);

}  // namespace riskstrat
