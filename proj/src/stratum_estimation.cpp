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

#include "riskstrat/stratum_estimation.hpp"

#include <algorithm>

#include "riskstrat/error.hpp"
#include "riskstrat/feature_matrix.hpp"
#include "riskstrat/rng.hpp"

namespace riskstrat {

namespace {

enum Purpose : std::uint64_t { kPs = 21, kBootstrap = 22 };

constexpr double kDaysPerYear = 365.25;

}  // namespace

StratumAnalysis estimate_stratum(const CovariateTable& cov, const CohortTable& cohort, OutcomeId outcome,
                                 std::span<const SubjectId> members, int stratum, const StudySettings& settings,
                                 const EstimationOptions& options) {
  StratumAnalysis out;
  auto& eff = out.effect;
  eff.outcome_id = outcome;
  eff.risk_stratum = stratum == 0 ? "overall" : std::to_string(stratum);
  const auto fail = [&](const std::string& step, const std::exception& e) {
    eff.reasons.push_back(step + ": " + e.what());
  };

  const int tar = settings.time_at_risk_days;
  const std::size_t n = members.size();
  std::vector<int> trt(n);
  std::vector<double> time(n);
  std::vector<char> event(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = cohort.at(members[i]);
    const auto obs = observe(row, outcome, tar);
    trt[i] = row.treatment;
    time[i] = obs.time;
    event[i] = obs.event ? 1 : 0;
    const double years = std::min(row.followup_days, tar) / kDaysPerYear;
    if (row.treatment == 1) {
      ++eff.n_t;
      eff.py_t += years;
      eff.events_t += obs.event;
    } else {
      ++eff.n_c;
      eff.py_c += years;
      eff.events_c += obs.event;
    }
  }

  const auto x = FeatureMatrix::from_table(cov, members);
  const auto key = [&](std::uint64_t purpose) {
    return derive_key({settings.seed, static_cast<std::uint64_t>(outcome), static_cast<std::uint64_t>(stratum),
                       purpose});
  };

  // Propensity model and PS strata.
  std::optional<PsStrata> strata;
  try {
    auto ps = estimate_propensity(x, members, trt, settings.cv_folds, settings.lambda_grid, key(kPs));
    out.ps = std::move(ps.assignment);
    std::vector<double> reference;
    if (settings.estimand == Estimand::att)
      for (std::size_t i = 0; i < n; ++i)
        if (trt[i] == 1) reference.push_back(out.ps.propensity[i]);
    strata = stratify_ps(out.ps.propensity, settings.ps_strata_count, reference);
    for (std::size_t i = 0; i < n; ++i) out.ps.ps_stratum[i] = strata->label[i];
    if (strata->collapsed) eff.warnings.push_back("PS strata: " + strata->warning);
    out.equipoise = equipoise_fraction(out.ps.preference);
  } catch (const Error& e) {
    fail("propensity model", e);
  }

  try {
    if (strata) out.balance = compute_balance(x, trt, StrataAdjustment{strata->label});
  } catch (const Error& e) {
    fail("balance", e);
  }

  if (strata) {
    try {
      const auto cox = fit_cox(time, event, trt, strata->label, settings.ties);
      eff.log_hr = cox.log_hr;
      eff.se = cox.se;
      eff.hr = cox.hr();
      eff.hr_lo = cox.lo95();
      eff.hr_hi = cox.hi95();
    } catch (const Error& e) {
      fail("hazard ratio", e);
    }

    std::vector<StratumSample> samples(static_cast<std::size_t>(strata->count));
    for (std::size_t i = 0; i < n; ++i) {
      auto& s = samples[static_cast<std::size_t>(strata->label[i] - 1)];
      auto& arm = trt[i] == 1 ? s.treated : s.comparator;
      arm.time.push_back(time[i]);
      arm.event.push_back(event[i]);
    }
    for (auto& s : samples)
      s.weight = static_cast<double>(s.treated.time.size()) +
                 (settings.estimand == Estimand::ate ? static_cast<double>(s.comparator.time.size()) : 0.0);
    try {
      const auto ard = ard_at_horizon(samples, tar, options.bootstrap_reps, key(kBootstrap));
      eff.ard = ard.ard;
      eff.ard_lo = ard.lo;
      eff.ard_hi = ard.hi;
      eff.ard_ci_method = ard.ci_method;
      eff.warnings.insert(eff.warnings.end(), ard.warnings.begin(), ard.warnings.end());
    } catch (const Error& e) {
      fail("absolute risk difference", e);
    }

    if (options.keep_km)
      for (std::size_t s = 0; s < samples.size(); ++s) {
        const int label = static_cast<int>(s) + 1;
        if (!samples[s].treated.time.empty())
          out.km.push_back({label, 1, km_curve(samples[s].treated.time, samples[s].treated.event)});
        if (!samples[s].comparator.time.empty())
          out.km.push_back({label, 0, km_curve(samples[s].comparator.time, samples[s].comparator.event)});
      }

    if (!settings.negative_control_ids.empty()) {
      try {
        out.controls = estimate_negative_controls(cohort, members, strata->label, settings.negative_control_ids,
                                                  settings);
        if (out.controls.estimates.size() >= 5) out.null = fit_empirical_null(out.controls.estimates);
        else
          eff.warnings.push_back("empirical null not fitted: " + std::to_string(out.controls.estimates.size()) +
                                 " usable negative controls");
      } catch (const Error& e) {
        fail("negative controls", e);
      }
    }
  }

  std::optional<NcSummary> nc;
  if (!out.controls.estimates.empty()) nc = summarize_controls(out.controls.estimates, settings.nc_alpha);
  eff.verdict = diagnostics_verdict(out.balance, out.equipoise, nc, settings,
                                    [&](CovariateId id) { return cov.name_of(id); });
  return out;
}

}  // namespace riskstrat
