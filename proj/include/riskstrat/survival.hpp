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
#include <span>
#include <string>
#include <vector>

#include "riskstrat/settings.hpp"

namespace riskstrat {

/// Product-limit step function. Steps occur at event times only.
struct SurvivalCurve {
  std::vector<double> event_times;
  std::vector<double> survival;
  std::vector<double> greenwood_var;
  std::vector<std::size_t> at_risk;
  std::vector<std::size_t> events;

  /// S(t): value of the last step at or before t, 1 before the first step.
  double at(double t) const;
  double variance_at(double t) const;
};

/// Kaplan-Meier estimate with Greenwood variance. Once the curve reaches 0 the
/// variance is reported as 0.
SurvivalCurve km_curve(std::span<const double> time, std::span<const char> event);

/// Stratified Cox partial likelihood in one coefficient.
class CoxPartialLikelihood {
 public:
  struct Value {
    double loglik = 0.0;
    double gradient = 0.0;
    double hessian = 0.0;
  };

  /// Strata without an event or without variation in `x` are dropped.
  CoxPartialLikelihood(std::span<const double> time, std::span<const char> event,
                       std::span<const double> x, std::span<const int> strata,
                       TieMethod ties = TieMethod::efron);

  Value evaluate(double beta) const;
  std::size_t informative_strata() const noexcept { return blocks_.size(); }

 private:
  struct Subject {
    double time;
    double x;
    bool event;
  };
  // Subjects of one stratum sorted by descending time.
  std::vector<std::vector<Subject>> blocks_;
  TieMethod ties_;
};

struct CoxFit {
  double log_hr = 0.0;
  double se = 0.0;
  double loglik = 0.0;
  int iterations = 0;
  std::size_t informative_strata = 0;

  double hr() const;
  double lo95() const;
  double hi95() const;
};

/// Newton-Raphson maximizer of the stratified partial likelihood with the
/// treatment indicator as the single covariate. Throws no_contrast when no
/// stratum is informative and non_convergence on a monotone likelihood.
CoxFit fit_cox(std::span<const double> time, std::span<const char> event,
               std::span<const int> treatment, std::span<const int> strata,
               TieMethod ties = TieMethod::efron);

/// Observations of both arms inside one PS stratum.
struct ArmSample {
  std::vector<double> time;
  std::vector<char> event;
};

struct StratumSample {
  ArmSample treated;
  ArmSample comparator;
  /// Unnormalized stratum weight (population share for ATE, treated share for ATT).
  double weight = 0.0;
};

struct ArdEstimate {
  /// Percentage points; positive favors the treated arm.
  double ard = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::string ci_method;
  std::size_t strata_used = 0;
  std::vector<std::string> warnings;
};

/// ARD = sum_s w_s [S_T,s(h) - S_C,s(h)] x 100 with a percentile bootstrap
/// that resamples subjects within each stratum and arm. With zero replicates
/// the interval comes from Greenwood variances.
ArdEstimate ard_at_horizon(std::span<const StratumSample> strata, double horizon,
                           int bootstrap_reps, std::uint64_t seed);

}  // namespace riskstrat
