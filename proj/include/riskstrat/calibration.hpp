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

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "riskstrat/cohort_data.hpp"
#include "riskstrat/propensity.hpp"
#include "riskstrat/settings.hpp"

namespace riskstrat {

struct NegativeControlEstimate {
  OutcomeId outcome_id = 0;
  double log_hr = 0.0;
  double se = 0.0;  // > 0
};

struct SkippedControl {
  OutcomeId outcome_id = 0;
  std::string reason;
};

struct NegativeControlSet {
  std::vector<NegativeControlEstimate> estimates;
  std::vector<SkippedControl> skipped;
};

/// Stratified Cox HR per control on the given members, reusing their PS
/// strata. Members with a prior record of a control are left out of that
/// control's fit. Controls without events or without convergence are skipped.
NegativeControlSet estimate_negative_controls(const CohortTable& cohort, std::span<const SubjectId> members,
                                              std::span<const int> ps_stratum,
                                              std::span<const OutcomeId> controls,
                                              const StudySettings& settings);

/// Systematic-error distribution: log_hr_i ~ Normal(mu, sigma^2 + se_i^2).
struct EmpiricalNull {
  double mu = 0.0;
  double sigma = 0.0;
  std::size_t n_controls = 0;
};

double null_log_likelihood(std::span<const NegativeControlEstimate> estimates, double mu, double sigma);

/// Maximum likelihood over mu and sigma >= 0. mu is profiled out in closed
/// form; sigma is located on a grid and refined by golden-section search.
EmpiricalNull fit_empirical_null(std::span<const NegativeControlEstimate> estimates);

/// Two-sided p of log_hr under Normal(mu, sigma^2 + se^2).
double calibrated_p(double log_hr, double se, const EmpiricalNull& null);
double standard_p(double log_hr, double se);

nlohmann::json to_json(const EmpiricalNull& null);

enum class Verdict { pass, fail, indeterminate };
const char* to_string(Verdict v) noexcept;

struct NcSummary {
  std::size_t used = 0;
  std::size_t significant = 0;
};

NcSummary summarize_controls(std::span<const NegativeControlEstimate> estimates, double alpha);

struct DiagnosticsVerdict {
  Verdict verdict = Verdict::indeterminate;
  std::vector<std::string> reasons;

  bool pass() const noexcept { return verdict == Verdict::pass; }
};

/// Any failed check gives fail; otherwise any missing input gives
/// indeterminate. A control summary with zero usable controls counts as missing.
DiagnosticsVerdict diagnostics_verdict(const std::optional<std::vector<BalanceRow>>& balance,
                                       std::optional<double> equipoise,
                                       std::optional<NcSummary> controls, const StudySettings& settings,
                                       const std::function<std::string(CovariateId)>& name_of = {});

}  // namespace riskstrat
