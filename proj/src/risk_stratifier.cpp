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

#include "riskstrat/risk_stratifier.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "riskstrat/error.hpp"
#include "riskstrat/rng.hpp"
#include "riskstrat/stats.hpp"

namespace riskstrat {

namespace {

enum Purpose : std::uint64_t { kDevelopmentPs = 11, kDevelopmentMatch = 12, kRiskModel = 13 };

}  // namespace

std::vector<SubjectId> eligible_subjects(const CohortTable& cohort, OutcomeId outcome) {
  std::vector<SubjectId> out;
  out.reserve(cohort.size());
  for (const auto& row : cohort.rows())
    if (!row.prior_outcome.contains(outcome)) out.push_back(row.subject);
  return out;
}

std::vector<double> outcome_labels(const CohortTable& cohort, std::span<const SubjectId> subjects,
                                   OutcomeId outcome, int time_at_risk_days) {
  std::vector<double> y;
  y.reserve(subjects.size());
  for (auto s : subjects) y.push_back(observe(cohort.at(s), outcome, time_at_risk_days).event ? 1.0 : 0.0);
  return y;
}

RiskModelDevelopment develop_risk_model(const CovariateTable& cov, const CohortTable& cohort, OutcomeId outcome,
                                        const StudySettings& settings, const SparseLinearModel* external) {
  RiskModelDevelopment dev;
  dev.eligible = eligible_subjects(cohort, outcome);
  if (dev.eligible.empty())
    throw Error(ErrorCode::insufficient_data, "no subjects remain after excluding prior outcomes");
  const auto x = FeatureMatrix::from_table(cov, dev.eligible);
  std::vector<int> trt;
  trt.reserve(dev.eligible.size());
  for (auto s : dev.eligible) trt.push_back(cohort.at(s).treatment);

  const auto u_outcome = static_cast<std::uint64_t>(outcome);
  auto ps = estimate_propensity(x, dev.eligible, trt, settings.cv_folds, settings.lambda_grid,
                                derive_key({settings.seed, u_outcome, kDevelopmentPs}));
  const auto match = match_caliper(ps.assignment.propensity, trt, settings.caliper,
                                   derive_key({settings.seed, u_outcome, kDevelopmentMatch}));
  ps.assignment.match_partner = match.partner;
  dev.ps = std::move(ps.assignment);

  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < dev.eligible.size(); ++i) {
    if (!match.partner[i]) continue;
    if (settings.drop_early_censored) {
      const auto& row = cohort.at(dev.eligible[i]);
      const auto obs = observe(row, outcome, settings.time_at_risk_days);
      if (!obs.event && obs.time < settings.time_at_risk_days) continue;
    }
    rows.push_back(i);
    dev.development.push_back(dev.eligible[i]);
  }
  if (rows.empty()) throw Error(ErrorCode::insufficient_data, "matched development set is empty");
  const auto y = outcome_labels(cohort, dev.development, outcome, settings.time_at_risk_days);
  dev.n_events = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1.0));
  if (external) {
    dev.model = *external;
    return dev;
  }
  if (dev.n_events < static_cast<std::size_t>(settings.min_events))
    throw Error(ErrorCode::insufficient_data,
                "insufficient events: " + std::to_string(dev.n_events) + " in the matched development set, need " +
                    std::to_string(settings.min_events));
  dev.model = fit_lasso_cv(x.select_rows(rows), y, settings.cv_folds, settings.lambda_grid,
                           derive_key({settings.seed, u_outcome, kRiskModel}));
  return dev;
}

std::vector<PerformanceSummary> evaluate_risk_model(const SparseLinearModel& model, const CovariateTable& cov,
                                                    const CohortTable& cohort, OutcomeId outcome,
                                                    std::span<const SubjectId> matched,
                                                    const StudySettings& settings) {
  const auto eligible = eligible_subjects(cohort, outcome);
  std::vector<SubjectId> treated, comparator;
  for (auto s : eligible) (cohort.at(s).treatment == 1 ? treated : comparator).push_back(s);

  auto summarize = [&](std::string label, std::span<const SubjectId> subjects) {
    const auto x = FeatureMatrix::from_table(cov, subjects);
    const auto pred = predict_proba(model, x);
    const auto y = outcome_labels(cohort, subjects, outcome, settings.time_at_risk_days);
    return summarize_performance(std::move(label), pred, y);
  };
  std::vector<PerformanceSummary> out;
  out.push_back(summarize("Matched", matched));
  out.push_back(summarize("Treatment", treated));
  out.push_back(summarize("Comparator", comparator));
  out.push_back(summarize("Entire population", eligible));
  return out;
}

std::vector<SubjectId> RiskStrata::members(int stratum) const {
  std::vector<SubjectId> out;
  for (std::size_t i = 0; i < subjects.size(); ++i)
    if (assignment[i] == stratum) out.push_back(subjects[i]);
  return out;
}

RiskStrata assign_risk_strata(std::span<const SubjectId> subjects, std::span<const double> predicted, int k) {
  if (k < 2) throw Error(ErrorCode::invalid_input, "risk strata: k must be >= 2");
  if (predicted.empty()) throw Error(ErrorCode::invalid_input, "risk strata: no predictions");
  if (subjects.size() != predicted.size()) throw Error(ErrorCode::invalid_input, "risk strata: length mismatch");
  std::vector<double> sorted(predicted.begin(), predicted.end());
  std::sort(sorted.begin(), sorted.end());
  const auto distinct = static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
  if (distinct < static_cast<std::size_t>(k))
    throw Error(ErrorCode::degenerate, "risk strata: only " + std::to_string(distinct) +
                                           " distinct predicted risks for " + std::to_string(k) +
                                           " strata; reduce risk_strata_count");
  sorted.assign(predicted.begin(), predicted.end());
  std::sort(sorted.begin(), sorted.end());

  RiskStrata out;
  for (int q = 1; q < k; ++q) out.boundaries.push_back(quantile_sorted(sorted, static_cast<double>(q) / k));
  out.subjects.assign(subjects.begin(), subjects.end());
  out.predicted.assign(predicted.begin(), predicted.end());
  out.assignment.resize(predicted.size());
  std::vector<std::size_t> size(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const auto pos = std::lower_bound(out.boundaries.begin(), out.boundaries.end(), predicted[i]);
    out.assignment[i] = static_cast<int>(pos - out.boundaries.begin()) + 1;
    ++size[static_cast<std::size_t>(out.assignment[i] - 1)];
  }
  const bool increasing = std::adjacent_find(out.boundaries.begin(), out.boundaries.end(),
                                             std::greater_equal<>()) == out.boundaries.end();
  if (!increasing || std::find(size.begin(), size.end(), 0) != size.end())
    throw Error(ErrorCode::degenerate,
                "risk strata: tied predicted risks leave a stratum empty; reduce risk_strata_count");
  return out;
}

SparseLinearModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open model " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_input, path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

void save_model(const SparseLinearModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot open " + path.string() + " for writing");
  out << to_json(model).dump(2) << '\n';
}

}  // namespace riskstrat
