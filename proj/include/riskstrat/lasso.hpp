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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riskstrat/feature_matrix.hpp"
#include "json.hpp"

namespace riskstrat {

struct TrainingMeta {
  std::size_t n = 0;
  std::size_t n_events = 0;
  /// Mean held-out log-likelihood per grid value, when fitted through CV.
  std::vector<double> fold_likelihoods;
  std::vector<double> lambda_grid;
};

/// Intercept plus sparse coefficients of an L1-penalized logistic model.
struct SparseLinearModel {
  double intercept = 0.0;
  std::map<CovariateId, double> coefficients;  // zeros omitted
  double lambda = 0.0;
  TrainingMeta meta;
};

struct LassoOptions {
  double tolerance = 1e-7;
  int max_sweeps = 10000;
  /// Record the penalized objective after every outer iteration.
  bool trace_objective = false;
};

struct LassoFit {
  SparseLinearModel model;
  int sweeps = 0;
  bool converged = false;
  double objective = 0.0;
  std::vector<double> objective_trace;
};

/// Per-column penalty scale: the column's standard deviation for continuous
/// covariates (unit-variance penalization), 1 for binary covariates.
std::vector<double> penalty_factors(const FeatureMatrix& x, std::span<const double> weights = {});

/// (1/sum w) * sum w_i * logloss_i + lambda * sum pf_j * |beta_j|, with beta in
/// column order of `x`.
double penalized_objective(const FeatureMatrix& x, std::span<const double> y,
                           std::span<const double> weights, double intercept,
                           std::span<const double> beta, double lambda);

/// Smallest penalty at which every coefficient is zero.
double lambda_max(const FeatureMatrix& x, std::span<const double> y,
                  std::span<const double> weights = {});

/// Minimizes the weighted mean log-loss plus lambda * sum pf_j |beta_j| by
/// quadratic-approximation coordinate descent with an unpenalized intercept.
/// `y` holds 0/1 labels; empty `weights` means unit weights.
LassoFit fit_logistic_lasso(const FeatureMatrix& x, std::span<const double> y, double lambda,
                            std::span<const double> weights = {},
                            const LassoOptions& options = {});

struct CvResult {
  double lambda_star = 0.0;
  std::size_t index = 0;
  std::vector<double> grid;
  /// Mean over folds of the per-subject held-out log-likelihood.
  std::vector<double> mean_loglik;
  std::vector<int> fold_of_row;
  std::uint64_t seed_used = 0;
};

/// Stratified k-fold selection of the penalty maximizing mean held-out
/// log-likelihood. Ties go to the larger penalty. An empty grid means the
/// default 20-point grid from lambda_max.
CvResult cv_select_lambda(const FeatureMatrix& x, std::span<const double> y, int folds,
                          std::span<const double> grid, std::uint64_t seed,
                          const LassoOptions& options = {});

/// CV selection followed by a refit on all rows at the chosen penalty.
SparseLinearModel fit_lasso_cv(const FeatureMatrix& x, std::span<const double> y, int folds,
                               std::span<const double> grid, std::uint64_t seed,
                               const LassoOptions& options = {});

double logistic(double eta) noexcept;
double logit(double p) noexcept;

std::vector<double> predict_proba(const SparseLinearModel& model, const FeatureMatrix& x);

struct CStatistic {
  double value = 0.5;
  double se = 0.0;
  double lo = 0.5;
  double hi = 0.5;
};

/// Probability that a random positive outranks a random negative (ties count
/// one half), with a DeLong rank-variance 95% interval.
CStatistic c_statistic(std::span<const double> pred, std::span<const double> labels);

struct Calibration {
  double intercept = 0.0;
  double slope = 1.0;
};

/// Slope from a logistic refit on logit(pred); intercept from an offset model
/// with the slope fixed at 1.
Calibration calibration_metrics(std::span<const double> pred, std::span<const double> labels);

struct PerformanceSummary {
  std::string population;  // Matched | Treatment | Comparator | Entire population
  std::size_t n = 0;
  std::size_t n_events = 0;
  bool valid = false;
  std::string note;
  CStatistic c;
  /// Absent when undefined, e.g. for constant predictions; `note` says why.
  std::optional<Calibration> calibration;
};

PerformanceSummary summarize_performance(std::string population, std::span<const double> pred,
                                         std::span<const double> labels);

nlohmann::json to_json(const SparseLinearModel& model);
SparseLinearModel model_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PerformanceSummary& p);

}  // namespace riskstrat
