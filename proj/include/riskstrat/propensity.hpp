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
#include <variant>
#include <vector>

#include "riskstrat/feature_matrix.hpp"
#include "riskstrat/lasso.hpp"
#include "riskstrat/stats.hpp"

namespace riskstrat {

/// Per-subject propensity bookkeeping. Indices refer to rows of the fitting task.
struct PsAssignment {
  std::vector<SubjectId> subjects;
  std::vector<int> treatment;
  std::vector<double> propensity;
  std::vector<double> preference;
  /// Row index of the match partner; symmetric and crosses arms.
  std::vector<std::optional<std::size_t>> match_partner;
  /// 1-based PS stratum, populated only when stratification ran.
  std::vector<std::optional<int>> ps_stratum;

  std::size_t size() const noexcept { return subjects.size(); }
  double treated_fraction() const;
};

/// logit(F) = logit(S) - logit(P). Both inputs strictly inside (0, 1).
double preference_score(double propensity, double treated_fraction);

/// Propensity model fitted with cross-validated L1 logistic regression, plus
/// propensity and preference scores for every row of `x`.
struct PropensityFit {
  SparseLinearModel model;
  PsAssignment assignment;
};

PropensityFit estimate_propensity(const FeatureMatrix& x, std::span<const SubjectId> subjects,
                                  std::span<const int> treatment, int cv_folds,
                                  std::span<const double> lambda_grid, std::uint64_t seed);

struct MatchResult {
  std::vector<std::optional<std::size_t>> partner;
  std::size_t pairs = 0;
  double caliper_width = 0.0;
};

/// Greedy 1:1 nearest-neighbor matching without replacement on the given
/// scores. Treated rows are visited in descending score order; equal scores
/// are ordered by a seeded hash. A pair is accepted only within `width`.
MatchResult match_on_scores(std::span<const double> scores, std::span<const int> treatment,
                            double width, std::uint64_t seed);

/// Matching on logit(propensity) with width = caliper * SD(logit propensity)
/// over all rows.
MatchResult match_caliper(std::span<const double> propensity, std::span<const int> treatment,
                          double caliper, std::uint64_t seed);

struct PsStrata {
  std::vector<int> label;  // 1-based
  int count = 0;
  std::vector<double> boundaries;
  bool collapsed = false;
  std::string warning;
};

/// Quantile stratification. Cut points are the k-quantiles of `reference`
/// (or of `values` when empty); values equal to a cut point go to the lower
/// stratum. Empty strata are removed and the remainder relabelled.
PsStrata stratify_ps(std::span<const double> values, int k, std::span<const double> reference = {});

struct BalanceRow {
  CovariateId covariate_id = 0;
  double smd_before = 0.0;
  double smd_after = 0.0;
  /// Zero pooled variance with unequal means.
  bool infinite_before = false;
  bool infinite_after = false;
};

struct NoAdjustment {};
struct MatchedSet {
  std::vector<bool> in_set;
};
struct StrataAdjustment {
  std::vector<int> label;
};
using BalanceAdjustment = std::variant<NoAdjustment, MatchedSet, StrataAdjustment>;

/// Standardized mean differences (treated minus comparator) before and after
/// adjustment. The adjusted moments are stratum-size-weighted within-stratum
/// moments; strata missing an arm are skipped.
std::vector<BalanceRow> compute_balance(const FeatureMatrix& x, std::span<const int> treatment,
                                        const BalanceAdjustment& adjustment);

/// Fraction of preference scores in [0.3, 0.7].
double equipoise_fraction(std::span<const double> preference);

}  // namespace riskstrat
