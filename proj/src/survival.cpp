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

#include "riskstrat/survival.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "riskstrat/error.hpp"
#include "riskstrat/rng.hpp"
#include "riskstrat/stats.hpp"

namespace riskstrat {

namespace {

std::size_t step_index(const std::vector<double>& times, double t) {
  return static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
}

void check_survival_input(std::span<const double> time, std::span<const char> event) {
  if (time.size() != event.size()) throw Error(ErrorCode::invalid_input, "survival: length mismatch");
  for (double t : time)
    if (!std::isfinite(t) || t < 0.0)
      throw Error(ErrorCode::invalid_input, "survival: times must be finite and >= 0");
}

}  // namespace

double SurvivalCurve::at(double t) const {
  const auto k = step_index(event_times, t);
  return k == 0 ? 1.0 : survival[k - 1];
}

double SurvivalCurve::variance_at(double t) const {
  const auto k = step_index(event_times, t);
  return k == 0 ? 0.0 : greenwood_var[k - 1];
}

SurvivalCurve km_curve(std::span<const double> time, std::span<const char> event) {
  check_survival_input(time, event);
  std::vector<std::size_t> order(time.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return time[a] < time[b]; });

  SurvivalCurve curve;
  std::size_t n = time.size();
  double s = 1.0;
  double gw = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    const double t = time[order[i]];
    std::size_t d = 0, c = 0;
    for (; i < order.size() && time[order[i]] == t; ++i, ++c)
      if (event[order[i]]) ++d;
    if (d > 0) {
      s *= static_cast<double>(n - d) / static_cast<double>(n);
      if (n > d) gw += static_cast<double>(d) / (static_cast<double>(n) * static_cast<double>(n - d));
      curve.event_times.push_back(t);
      curve.survival.push_back(s);
      curve.greenwood_var.push_back(s > 0.0 ? s * s * gw : 0.0);
      curve.at_risk.push_back(n);
      curve.events.push_back(d);
    }
    n -= c;
  }
  return curve;
}

CoxPartialLikelihood::CoxPartialLikelihood(std::span<const double> time, std::span<const char> event,
                                           std::span<const double> x, std::span<const int> strata,
                                           TieMethod ties)
    : ties_(ties) {
  check_survival_input(time, event);
  if (x.size() != time.size() || strata.size() != time.size())
    throw Error(ErrorCode::invalid_input, "cox: length mismatch");
  std::map<int, std::vector<Subject>> by_stratum;
  for (std::size_t i = 0; i < time.size(); ++i) {
    if (!std::isfinite(x[i])) throw Error(ErrorCode::invalid_input, "cox: covariate must be finite");
    by_stratum[strata[i]].push_back({time[i], x[i], event[i] != 0});
  }
  for (auto& [label, block] : by_stratum) {
    const bool any_event = std::any_of(block.begin(), block.end(), [](const Subject& s) { return s.event; });
    const auto [lo, hi] = std::minmax_element(block.begin(), block.end(),
                                              [](const Subject& a, const Subject& b) { return a.x < b.x; });
    if (!any_event || lo->x == hi->x) continue;
    std::stable_sort(block.begin(), block.end(), [](const Subject& a, const Subject& b) { return a.time > b.time; });
    blocks_.push_back(std::move(block));
  }
}

CoxPartialLikelihood::Value CoxPartialLikelihood::evaluate(double beta) const {
  Value v;
  for (const auto& block : blocks_) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < block.size();) {
      const double t = block[i].time;
      double d0 = 0.0, d1 = 0.0, d2 = 0.0, xe = 0.0;
      std::size_t d = 0;
      for (; i < block.size() && block[i].time == t; ++i) {
        const double x = block[i].x;
        const double r = std::exp(beta * x);
        s0 += r;
        s1 += r * x;
        s2 += r * x * x;
        if (block[i].event) {
          d0 += r;
          d1 += r * x;
          d2 += r * x * x;
          xe += x;
          ++d;
        }
      }
      if (d == 0) continue;
      v.loglik += beta * xe;
      v.gradient += xe;
      const double dd = static_cast<double>(d);
      for (std::size_t l = 0; l < d; ++l) {
        const double f = ties_ == TieMethod::efron ? static_cast<double>(l) / dd : 0.0;
        const double a0 = s0 - f * d0, a1 = s1 - f * d1, a2 = s2 - f * d2;
        const double m = a1 / a0;
        v.loglik -= std::log(a0);
        v.gradient -= m;
        v.hessian -= a2 / a0 - m * m;
      }
    }
  }
  return v;
}

double CoxFit::hr() const { return std::exp(log_hr); }
double CoxFit::lo95() const { return std::exp(log_hr - kZ975 * se); }
double CoxFit::hi95() const { return std::exp(log_hr + kZ975 * se); }

CoxFit fit_cox(std::span<const double> time, std::span<const char> event, std::span<const int> treatment,
               std::span<const int> strata, TieMethod ties) {
  std::vector<double> x(treatment.begin(), treatment.end());
  const CoxPartialLikelihood pl(time, event, x, strata, ties);
  if (pl.informative_strata() == 0)
    throw Error(ErrorCode::no_contrast, "no contrast: no stratum has events in a stratum with both arms");

  constexpr int max_iter = 100;
  constexpr double max_abs_beta = 20.0;
  CoxFit fit;
  fit.informative_strata = pl.informative_strata();
  double beta = 0.0;
  auto cur = pl.evaluate(beta);
  for (int it = 1; it <= max_iter; ++it) {
    fit.iterations = it;
    if (!(cur.hessian < -1e-12))
      throw Error(ErrorCode::non_convergence, "cox: information is zero (monotone likelihood)");
    double step = -cur.gradient / cur.hessian;
    auto next = pl.evaluate(beta + step);
    for (int h = 0; h < 40 && !(next.loglik >= cur.loglik - 1e-12); ++h) {
      step /= 2.0;
      next = pl.evaluate(beta + step);
    }
    beta += step;
    cur = next;
    if (std::abs(beta) > max_abs_beta)
      throw Error(ErrorCode::non_convergence, "cox: coefficient diverges (monotone likelihood)");
    if (std::abs(step) < 1e-9) {
      if (!(cur.hessian < -1e-12))
        throw Error(ErrorCode::non_convergence, "cox: information is zero (monotone likelihood)");
      fit.log_hr = beta;
      fit.se = 1.0 / std::sqrt(-cur.hessian);
      fit.loglik = cur.loglik;
      return fit;
    }
  }
  throw Error(ErrorCode::non_convergence, "cox: Newton-Raphson did not converge");
}

namespace {

// One arm sorted by time, ready for weighted product-limit passes.
struct SortedArm {
  std::vector<double> time;
  std::vector<char> event;

  explicit SortedArm(const ArmSample& a) {
    std::vector<std::size_t> order(a.time.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto i, auto j) { return a.time[i] < a.time[j]; });
    for (auto i : order) {
      time.push_back(a.time[i]);
      event.push_back(a.event[i]);
    }
  }

  // Product-limit S(h) where subject i appears count[i] times.
  double survival_at(double h, const std::vector<std::uint32_t>& count) const {
    double n = 0.0;
    for (auto c : count) n += c;
    double s = 1.0;
    for (std::size_t i = 0; i < time.size() && time[i] <= h;) {
      const double t = time[i];
      double d = 0.0, c = 0.0;
      for (; i < time.size() && time[i] == t; ++i) {
        c += count[i];
        if (event[i]) d += count[i];
      }
      if (d > 0.0 && n > 0.0) s *= (n - d) / n;
      n -= c;
    }
    return s;
  }
};

}  // namespace

ArdEstimate ard_at_horizon(std::span<const StratumSample> strata, double horizon, int bootstrap_reps,
                           std::uint64_t seed) {
  if (bootstrap_reps < 0) throw Error(ErrorCode::invalid_input, "ard: bootstrap replicates must be >= 0");
  ArdEstimate out;
  std::vector<std::size_t> used;
  double total_weight = 0.0;
  for (std::size_t s = 0; s < strata.size(); ++s) {
    const auto& st = strata[s];
    if (st.treated.time.size() != st.treated.event.size() ||
        st.comparator.time.size() != st.comparator.event.size())
      throw Error(ErrorCode::invalid_input, "ard: length mismatch");
    if (st.treated.time.empty() || st.comparator.time.empty()) {
      if (st.weight > 0.0)
        out.warnings.push_back("PS stratum " + std::to_string(s + 1) +
                               " lacks one arm and is excluded from the ARD");
      continue;
    }
    if (st.weight <= 0.0) continue;
    used.push_back(s);
    total_weight += st.weight;
  }
  if (used.empty()) throw Error(ErrorCode::no_contrast, "no contrast: no PS stratum contains both arms");
  out.strata_used = used.size();

  std::vector<double> w;
  std::vector<SortedArm> treated, comparator;
  double var = 0.0;
  for (auto s : used) {
    const auto& st = strata[s];
    w.push_back(st.weight / total_weight);
    treated.emplace_back(st.treated);
    comparator.emplace_back(st.comparator);
    const auto kt = km_curve(st.treated.time, st.treated.event);
    const auto kc = km_curve(st.comparator.time, st.comparator.event);
    out.ard += w.back() * (kt.at(horizon) - kc.at(horizon));
    var += w.back() * w.back() * (kt.variance_at(horizon) + kc.variance_at(horizon));
  }
  out.ard *= 100.0;

  if (bootstrap_reps == 0) {
    const double half = kZ975 * std::sqrt(var) * 100.0;
    out.lo = out.ard - half;
    out.hi = out.ard + half;
    out.ci_method = "normal (Greenwood)";
    return out;
  }

  std::vector<double> reps(static_cast<std::size_t>(bootstrap_reps));
  std::vector<std::uint32_t> count;
  for (int r = 0; r < bootstrap_reps; ++r) {
    double ard = 0.0;
    for (std::size_t k = 0; k < used.size(); ++k) {
      double arm_s[2];
      for (int arm = 0; arm < 2; ++arm) {
        const auto& a = arm == 1 ? treated[k] : comparator[k];
        KeyedStream rng(derive_key({seed, static_cast<std::uint64_t>(r), used[k], static_cast<std::uint64_t>(arm)}));
        count.assign(a.time.size(), 0);
        for (std::size_t i = 0; i < a.time.size(); ++i) ++count[rng.below(a.time.size())];
        arm_s[arm] = a.survival_at(horizon, count);
      }
      ard += w[k] * (arm_s[1] - arm_s[0]);
    }
    reps[static_cast<std::size_t>(r)] = ard * 100.0;
  }
  std::sort(reps.begin(), reps.end());
  out.lo = quantile_sorted(reps, 0.025);
  out.hi = quantile_sorted(reps, 0.975);
  out.ci_method = "percentile bootstrap";
  return out;
}

}  // namespace riskstrat
