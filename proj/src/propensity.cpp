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

#include "riskstrat/propensity.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>

#include "riskstrat/error.hpp"
#include "riskstrat/rng.hpp"
#include "riskstrat/stats.hpp"

namespace riskstrat {

double PsAssignment::treated_fraction() const {
  if (treatment.empty()) return 0.0;
  return static_cast<double>(std::count(treatment.begin(), treatment.end(), 1)) /
         static_cast<double>(treatment.size());
}

double preference_score(double propensity, double treated_fraction) {
  if (!(propensity > 0.0 && propensity < 1.0) || !(treated_fraction > 0.0 && treated_fraction < 1.0))
    throw Error(ErrorCode::invalid_input, "preference score: inputs must lie strictly inside (0, 1)");
  return logistic(logit(propensity) - logit(treated_fraction));
}

PropensityFit estimate_propensity(const FeatureMatrix& x, std::span<const SubjectId> subjects,
                                  std::span<const int> treatment, int cv_folds,
                                  std::span<const double> lambda_grid, std::uint64_t seed) {
  if (subjects.size() != x.rows() || treatment.size() != x.rows())
    throw Error(ErrorCode::invalid_input, "propensity: length mismatch");
  std::vector<double> y(treatment.begin(), treatment.end());
  PropensityFit fit;
  fit.model = fit_lasso_cv(x, y, cv_folds, lambda_grid, seed);
  auto& a = fit.assignment;
  a.subjects.assign(subjects.begin(), subjects.end());
  a.treatment.assign(treatment.begin(), treatment.end());
  a.propensity = predict_proba(fit.model, x);
  constexpr double eps = 1e-12;
  for (auto& p : a.propensity) p = std::clamp(p, eps, 1.0 - eps);
  const double share = a.treated_fraction();
  a.preference.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) a.preference[i] = preference_score(a.propensity[i], share);
  a.match_partner.assign(a.size(), std::nullopt);
  a.ps_stratum.assign(a.size(), std::nullopt);
  return fit;
}

MatchResult match_on_scores(std::span<const double> scores, std::span<const int> treatment,
                            double width, std::uint64_t seed) {
  if (scores.size() != treatment.size()) throw Error(ErrorCode::invalid_input, "matching: length mismatch");
  if (!(width >= 0.0)) throw Error(ErrorCode::invalid_input, "matching: caliper width must be >= 0");
  MatchResult res;
  res.caliper_width = width;
  res.partner.assign(scores.size(), std::nullopt);

  std::set<std::pair<double, std::size_t>> pool;
  std::vector<std::size_t> treated;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (treatment[i] == 1) treated.push_back(i);
    else pool.emplace(scores[i], i);
  }
  if (pool.empty() || treated.empty()) return res;

  std::vector<std::uint64_t> tiebreak(scores.size());
  for (auto i : treated) tiebreak[i] = derive_key({seed, static_cast<std::uint64_t>(i)});
  std::sort(treated.begin(), treated.end(), [&](auto a, auto b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return tiebreak[a] < tiebreak[b];
  });

  for (auto t : treated) {
    if (pool.empty()) break;
    const double s = scores[t];
    auto above = pool.lower_bound({s, 0});
    auto best = pool.end();
    double best_dist = std::numeric_limits<double>::infinity();
    if (above != pool.end()) {
      best = above;
      best_dist = above->first - s;
    }
    if (above != pool.begin()) {
      auto below = std::prev(above);
      // Equal distances resolve to the lower score.
      if (s - below->first <= best_dist) {
        best = below;
        best_dist = s - below->first;
      }
    }
    if (best == pool.end() || best_dist > width) continue;
    res.partner[t] = best->second;
    res.partner[best->second] = t;
    ++res.pairs;
    pool.erase(best);
  }
  return res;
}

MatchResult match_caliper(std::span<const double> propensity, std::span<const int> treatment,
                          double caliper, std::uint64_t seed) {
  if (!(caliper > 0.0)) throw Error(ErrorCode::invalid_input, "matching: caliper must be > 0");
  std::vector<double> lp(propensity.size());
  for (std::size_t i = 0; i < lp.size(); ++i) lp[i] = logit(propensity[i]);
  double sd = 0.0;
  if (lp.size() > 1) {
    const double m = std::accumulate(lp.begin(), lp.end(), 0.0) / static_cast<double>(lp.size());
    double ss = 0.0;
    for (double v : lp) ss += (v - m) * (v - m);
    sd = std::sqrt(ss / static_cast<double>(lp.size() - 1));
  }
  return match_on_scores(lp, treatment, caliper * sd, seed);
}

PsStrata stratify_ps(std::span<const double> values, int k, std::span<const double> reference) {
  if (k < 1) throw Error(ErrorCode::invalid_input, "stratify: k must be >= 1");
  if (values.empty()) throw Error(ErrorCode::invalid_input, "stratify: no values");
  std::vector<double> ref(reference.empty() ? values.begin() : reference.begin(),
                          reference.empty() ? values.end() : reference.end());
  std::sort(ref.begin(), ref.end());
  PsStrata out;
  for (int q = 1; q < k; ++q) out.boundaries.push_back(quantile_sorted(ref, static_cast<double>(q) / k));
  out.boundaries.erase(std::unique(out.boundaries.begin(), out.boundaries.end()), out.boundaries.end());

  std::vector<int> raw(values.size());
  std::vector<std::size_t> size(out.boundaries.size() + 1, 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto pos = std::lower_bound(out.boundaries.begin(), out.boundaries.end(), values[i]);
    raw[i] = static_cast<int>(pos - out.boundaries.begin());
    ++size[static_cast<std::size_t>(raw[i])];
  }
  std::vector<int> relabel(size.size(), 0);
  int next = 0;
  std::vector<double> kept_bounds;
  for (std::size_t s = 0; s < size.size(); ++s) {
    if (size[s] == 0) continue;
    relabel[s] = ++next;
    if (next > 1) kept_bounds.push_back(out.boundaries[s - 1]);
  }
  out.boundaries = std::move(kept_bounds);
  out.label.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out.label[i] = relabel[static_cast<std::size_t>(raw[i])];
  out.count = next;
  if (out.count < k) {
    out.collapsed = true;
    out.warning = "requested " + std::to_string(k) + " strata, collapsed to " +
                  std::to_string(out.count) + " because of tied values";
  }
  return out;
}

namespace {

struct Moments {
  double n = 0.0;
  double sum = 0.0;
  double sumsq = 0.0;
};

double smd(double mean_t, double var_t, double mean_c, double var_c, bool& infinite) {
  infinite = false;
  const double pooled = std::sqrt(std::max(0.0, (var_t + var_c) / 2.0));
  const double diff = mean_t - mean_c;
  if (pooled > 1e-12) return diff / pooled;
  if (std::abs(diff) <= 1e-12) return 0.0;
  infinite = true;
  return diff > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
}

// Weighted combination of per-stratum moments. Strata without both arms are skipped.
std::pair<double, double> arm_mean_var(const std::vector<std::array<Moments, 2>>& per_stratum,
                                       const std::vector<double>& weight, int arm) {
  double mean = 0.0, second = 0.0;
  for (std::size_t s = 0; s < per_stratum.size(); ++s) {
    const auto& m = per_stratum[s][static_cast<std::size_t>(arm)];
    if (weight[s] == 0.0) continue;
    mean += weight[s] * m.sum / m.n;
    second += weight[s] * m.sumsq / m.n;
  }
  return {mean, second - mean * mean};
}

}  // namespace

std::vector<BalanceRow> compute_balance(const FeatureMatrix& x, std::span<const int> treatment,
                                        const BalanceAdjustment& adjustment) {
  const std::size_t n = x.rows();
  if (treatment.size() != n) throw Error(ErrorCode::invalid_input, "balance: length mismatch");
  std::array<std::size_t, 2> arm_n{0, 0};
  for (int t : treatment) ++arm_n[static_cast<std::size_t>(t)];
  if (arm_n[0] == 0 || arm_n[1] == 0) throw Error(ErrorCode::no_contrast, "balance: an arm is empty");

  // Map rows to an adjustment group; -1 drops the row from the adjusted moments.
  std::vector<int> group(n, 0);
  int groups = 1;
  if (const auto* m = std::get_if<MatchedSet>(&adjustment)) {
    if (m->in_set.size() != n) throw Error(ErrorCode::invalid_input, "balance: matched-set length mismatch");
    for (std::size_t i = 0; i < n; ++i) group[i] = m->in_set[i] ? 0 : -1;
  } else if (const auto* s = std::get_if<StrataAdjustment>(&adjustment)) {
    if (s->label.size() != n) throw Error(ErrorCode::invalid_input, "balance: strata length mismatch");
    groups = *std::max_element(s->label.begin(), s->label.end());
    for (std::size_t i = 0; i < n; ++i) group[i] = s->label[i] - 1;
  }

  std::vector<std::array<Moments, 2>> base(static_cast<std::size_t>(groups));
  for (std::size_t i = 0; i < n; ++i)
    if (group[i] >= 0) base[static_cast<std::size_t>(group[i])][static_cast<std::size_t>(treatment[i])].n += 1;
  std::vector<double> weight(base.size(), 0.0);
  double total = 0.0;
  for (std::size_t s = 0; s < base.size(); ++s)
    if (base[s][0].n > 0 && base[s][1].n > 0) {
      weight[s] = base[s][0].n + base[s][1].n;
      total += weight[s];
    }
  const bool adjusted_ok = total > 0;
  for (auto& w : weight) w = adjusted_ok ? w / total : 0.0;

  std::vector<BalanceRow> rows;
  rows.reserve(x.cols());
  for (const auto& col : x.columns()) {
    std::array<Moments, 2> crude{};
    crude[0].n = static_cast<double>(arm_n[0]);
    crude[1].n = static_cast<double>(arm_n[1]);
    auto strata = base;
    for (std::size_t k = 0; k < col.rows.size(); ++k) {
      const auto r = col.rows[k];
      const double v = col.values[k];
      const auto arm = static_cast<std::size_t>(treatment[r]);
      crude[arm].sum += v;
      crude[arm].sumsq += v * v;
      if (group[r] >= 0) {
        strata[static_cast<std::size_t>(group[r])][arm].sum += v;
        strata[static_cast<std::size_t>(group[r])][arm].sumsq += v * v;
      }
    }
    BalanceRow row;
    row.covariate_id = col.id;
    {
      const double mt = crude[1].sum / crude[1].n, mc = crude[0].sum / crude[0].n;
      row.smd_before = smd(mt, crude[1].sumsq / crude[1].n - mt * mt, mc,
                           crude[0].sumsq / crude[0].n - mc * mc, row.infinite_before);
    }
    if (adjusted_ok) {
      auto [mt, vt] = arm_mean_var(strata, weight, 1);
      auto [mc, vc] = arm_mean_var(strata, weight, 0);
      row.smd_after = smd(mt, vt, mc, vc, row.infinite_after);
    } else {
      row.smd_after = std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(row);
  }
  return rows;
}

double equipoise_fraction(std::span<const double> preference) {
  if (preference.empty()) return 0.0;
  const auto inside = std::count_if(preference.begin(), preference.end(),
                                    [](double f) { return f >= 0.3 && f <= 0.7; });
  return static_cast<double>(inside) / static_cast<double>(preference.size());
}

}  // namespace riskstrat
