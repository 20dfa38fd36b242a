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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riskstrat/calibration.hpp"
#include "riskstrat/cohort_data.hpp"
#include "riskstrat/propensity.hpp"
#include "riskstrat/settings.hpp"
#include "riskstrat/survival.hpp"

namespace riskstrat {

/// Relative and absolute effect of one outcome inside one risk stratum.
/// Estimates are absent when the corresponding step failed; `reasons` says why.
struct StratumEffect {
  OutcomeId outcome_id = 0;
  /// "1".."k", or "overall".
  std::string risk_stratum;
  std::optional<double> log_hr, se, hr, hr_lo, hr_hi;
  /// Percentage points, positive favors the treated arm.
  std::optional<double> ard, ard_lo, ard_hi;
  std::string ard_ci_method;
  std::size_t n_t = 0, n_c = 0;
  double py_t = 0.0, py_c = 0.0;
  std::size_t events_t = 0, events_c = 0;
  DiagnosticsVerdict verdict;
  std::vector<std::string> reasons;
  std::vector<std::string> warnings;

  bool diagnostics_pass() const noexcept { return verdict.pass(); }
};

struct KmRecord {
  int ps_stratum = 0;
  int treatment = 0;
  SurvivalCurve curve;
};

struct StratumAnalysis {
  StratumEffect effect;
  /// Propensity, preference and PS stratum per member; empty when the PS fit failed.
  PsAssignment ps;
  std::optional<std::vector<BalanceRow>> balance;
  std::optional<double> equipoise;
  NegativeControlSet controls;
  std::optional<EmpiricalNull> null;
  std::vector<KmRecord> km;
};

struct EstimationOptions {
  int bootstrap_reps = 500;
  bool keep_km = false;
};

/// Fits a propensity model on the members, cuts PS strata, and estimates the
/// PS-stratified Cox HR and the weighted KM difference at the horizon, plus
/// balance, equipoise, negative controls and the diagnostics verdict. Step
/// failures are recorded in the effect, never thrown. `stratum` 0 means overall.
StratumAnalysis estimate_stratum(const CovariateTable& cov, const CohortTable& cohort, OutcomeId outcome,
                                 std::span<const SubjectId> members, int stratum, const StudySettings& settings,
                                 const EstimationOptions& options = {});

}  // namespace riskstrat
