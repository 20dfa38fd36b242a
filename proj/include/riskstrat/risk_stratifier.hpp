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
#include <span>
#include <vector>

#include "riskstrat/cohort_data.hpp"
#include "riskstrat/lasso.hpp"
#include "riskstrat/propensity.hpp"
#include "riskstrat/settings.hpp"

namespace riskstrat {

/// Subjects without a pre-index record of `outcome`, in cohort order.
std::vector<SubjectId> eligible_subjects(const CohortTable& cohort, OutcomeId outcome);

/// 1 when the outcome occurs within the time-at-risk window, else 0.
std::vector<double> outcome_labels(const CohortTable& cohort, std::span<const SubjectId> subjects,
                                   OutcomeId outcome, int time_at_risk_days);

struct RiskModelDevelopment {
  SparseLinearModel model;
  std::vector<SubjectId> eligible;
  /// Matched rows the model was fitted on.
  std::vector<SubjectId> development;
  /// Propensity and matching over `eligible`.
  PsAssignment ps;
  std::size_t n_events = 0;
};

/// Fits a propensity model on the eligible population, matches 1:1 within the
/// caliper and fits a cross-validated L1 logistic outcome model on the matched
/// rows. Throws insufficient_data below settings.min_events events. With an
/// external model the matching still runs but no model is fitted.
RiskModelDevelopment develop_risk_model(const CovariateTable& cov, const CohortTable& cohort, OutcomeId outcome,
                                        const StudySettings& settings,
                                        const SparseLinearModel* external = nullptr);

/// Matched, Treatment, Comparator and Entire population rows, in that order.
/// The last three are taken over the eligible population.
std::vector<PerformanceSummary> evaluate_risk_model(const SparseLinearModel& model, const CovariateTable& cov,
                                                    const CohortTable& cohort, OutcomeId outcome,
                                                    std::span<const SubjectId> matched,
                                                    const StudySettings& settings);

struct RiskStrata {
  /// Ascending cut points, k - 1 of them.
  std::vector<double> boundaries;
  std::vector<SubjectId> subjects;
  std::vector<double> predicted;
  /// 1-based stratum per subject.
  std::vector<int> assignment;
  SparseLinearModel model;
  std::vector<PerformanceSummary> performance;

  std::vector<SubjectId> members(int stratum) const;
};

/// Cuts pooled predictions at their k-quantiles; a prediction equal to a cut
/// point goes to the lower stratum.
RiskStrata assign_risk_strata(std::span<const SubjectId> subjects, std::span<const double> predicted, int k);

SparseLinearModel load_model(const std::filesystem::path& path);
void save_model(const SparseLinearModel& model, const std::filesystem::path& path);

}  // namespace riskstrat
