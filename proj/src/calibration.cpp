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

#include "riskstrat/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "riskstrat/error.hpp"
#include "riskstrat/stats.hpp"
#include "riskstrat/survival.hpp"
#include "riskstrat/text_io.hpp"

namespace riskstrat {

NegativeControlSet estimate_negative_controls(const CohortTable& cohort, std::span<const SubjectId> members,
                                              std::span<const int> ps_stratum,
                                              std::span<const OutcomeId> controls,
                                              const StudySettings& settings) {
  if (controls.empty()) throw Error(ErrorCode::invalid_input, "negative controls: the control list is empty");
  if (members.size() != ps_stratum.size())
    throw Error(ErrorCode::invalid_input, "negative controls: length mismatch");
  NegativeControlSet out;
  std::vector<double> time;
  std::vector<char> event;
  std::vector<int> trt, strata;
  for (auto id : controls) {
    time.clear();
    event.clear();
    trt.clear();
    strata.clear();
    for (std::size_t i = 0; i < members.size(); ++i) {
      const auto& row = cohort.at(members[i]);
      if (row.prior_outcome.contains(id)) continue;
      const auto obs = observe(row, id, settings.time_at_risk_days);
      time.push_back(obs.time);
      event.push_back(obs.event ? 1 : 0);
      trt.push_back(row.treatment);
      strata.push_back(ps_stratum[i]);
    }
    try {
      const auto fit = fit_cox(time, event, trt, strata, settings.ties);
      out.estimates.push_back({id, fit.log_hr, fit.se});
    } catch (const Error& e) {
      out.skipped.push_back({id, e.what()});
    }
  }
  return out;
}

double null_log_likelihood(std::span<const NegativeControlEstimate> estimates, double mu, double sigma) {
  double ll = 0.0;
  for (const auto& e : estimates) {
    const double v = sigma * sigma + e.se * e.se;
    const double r = e.log_hr - mu;
    ll -= 0.5 * (std::log(2.0 * std::numbers::pi * v) + r * r / v);
  }
  return ll;
}

namespace {

double profile_mu(std::span<const NegativeControlEstimate> estimates, double sigma) {
  double num = 0.0, den = 0.0;
  for (const auto& e : estimates) {
    const double w = 1.0 / (sigma * sigma + e.se * e.se);
    num += w * e.log_hr;
    den += w;
  }
  return num / den;
}

double profile_ll(std::span<const NegativeControlEstimate> estimates, double sigma) {
  return null_log_likelihood(estimates, profile_mu(estimates, sigma), sigma);
}

}  // namespace

EmpiricalNull fit_empirical_null(std::span<const NegativeControlEstimate> estimates) {
  if (estimates.size() < 5)
    throw Error(ErrorCode::insufficient_data, "empirical null needs at least 5 negative-control estimates, got " +
                                                  std::to_string(estimates.size()));
  double lo_y = estimates[0].log_hr, hi_y = lo_y, max_se = 0.0;
  for (const auto& e : estimates) {
    if (!std::isfinite(e.log_hr) || !(e.se > 0.0) || !std::isfinite(e.se))
      throw Error(ErrorCode::invalid_input, "empirical null: estimates need finite log_hr and se > 0");
    lo_y = std::min(lo_y, e.log_hr);
    hi_y = std::max(hi_y, e.log_hr);
    max_se = std::max(max_se, e.se);
  }
  // The profile maximum lies below the spread of the estimates.
  const double upper = 2.0 * (hi_y - lo_y) + max_se;
  constexpr int grid = 400;
  int best = 0;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (int g = 0; g <= grid; ++g) {
    const double ll = profile_ll(estimates, upper * g / grid);
    if (ll > best_ll) {
      best_ll = ll;
      best = g;
    }
  }
  double a = upper * std::max(0, best - 1) / grid;
  double b = upper * std::min(grid, best + 1) / grid;
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - ratio * (b - a), d = a + ratio * (b - a);
  double fc = profile_ll(estimates, c), fd = profile_ll(estimates, d);
  while (b - a > 1e-8) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - ratio * (b - a);
      fc = profile_ll(estimates, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + ratio * (b - a);
      fd = profile_ll(estimates, d);
    }
  }
  double sigma = (a + b) / 2.0;
  // The boundary sigma = 0 is a candidate the interior search cannot reach.
  if (profile_ll(estimates, 0.0) >= profile_ll(estimates, sigma)) sigma = 0.0;
  return {profile_mu(estimates, sigma), sigma, estimates.size()};
}

double calibrated_p(double log_hr, double se, const EmpiricalNull& null) {
  const double sd = std::sqrt(null.sigma * null.sigma + se * se);
  if (!(sd > 0.0)) return log_hr == null.mu ? 1.0 : 0.0;
  return two_sided_p((log_hr - null.mu) / sd);
}

double standard_p(double log_hr, double se) { return calibrated_p(log_hr, se, EmpiricalNull{}); }

nlohmann::json to_json(const EmpiricalNull& null) {
  return {{"mu", null.mu}, {"sigma", null.sigma}, {"n_controls", null.n_controls}};
}

const char* to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::indeterminate: return "indeterminate";
  }
  return "indeterminate";
}

NcSummary summarize_controls(std::span<const NegativeControlEstimate> estimates, double alpha) {
  NcSummary s;
  s.used = estimates.size();
  for (const auto& e : estimates)
    if (standard_p(e.log_hr, e.se) < alpha) ++s.significant;
  return s;
}

DiagnosticsVerdict diagnostics_verdict(const std::optional<std::vector<BalanceRow>>& balance,
                                       std::optional<double> equipoise, std::optional<NcSummary> controls,
                                       const StudySettings& settings,
                                       const std::function<std::string(CovariateId)>& name_of) {
  DiagnosticsVerdict out;
  bool failed = false, missing = false;
  auto fmt = [](double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
  };

  if (!balance) {
    missing = true;
    out.reasons.push_back("balance: not available");
  } else {
    for (const auto& row : *balance) {
      const double smd = std::abs(row.smd_after);
      if (std::isnan(row.smd_after) || smd > settings.max_smd) {
        failed = true;
        std::string name = name_of ? name_of(row.covariate_id) : std::string();
        out.reasons.push_back("balance: covariate " + std::to_string(row.covariate_id) +
                              (name.empty() ? "" : " (" + name + ")") + " has SMD after adjustment " +
                              fmt(row.smd_after) + " > " + fmt(settings.max_smd));
      }
    }
  }

  if (!equipoise) {
    missing = true;
    out.reasons.push_back("equipoise: not available");
  } else if (*equipoise < settings.equipoise_threshold) {
    failed = true;
    out.reasons.push_back("equipoise: " + fmt(*equipoise) + " of subjects have preference in [0.3, 0.7], below " +
                          fmt(settings.equipoise_threshold));
  }

  if (!controls || controls->used == 0) {
    missing = true;
    out.reasons.push_back("negative controls: no usable estimates");
  } else {
    const double frac = static_cast<double>(controls->significant) / static_cast<double>(controls->used);
    if (frac > settings.nc_max_significant_fraction) {
      failed = true;
      out.reasons.push_back("negative controls: " + std::to_string(controls->significant) + " of " +
                            std::to_string(controls->used) + " significant at alpha " + fmt(settings.nc_alpha) +
                            " (fraction " + fmt(frac) + " > " + fmt(settings.nc_max_significant_fraction) + ")");
    }
  }

  out.verdict = failed ? Verdict::fail : missing ? Verdict::indeterminate : Verdict::pass;
  return out;
}

}  // namespace riskstrat
