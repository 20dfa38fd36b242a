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

#include "riskstrat/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "riskstrat/error.hpp"
#include "riskstrat/rng.hpp"
#include "riskstrat/settings.hpp"

namespace riskstrat {

double logistic(double eta) noexcept {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double logit(double p) noexcept { return std::log(p) - std::log1p(-p); }

namespace {

// log(1 + e^eta) - y * eta
double log_loss(double eta, double y) noexcept {
  const double softplus = eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
  return softplus - y * eta;
}

double soft_threshold(double z, double t) noexcept {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

std::vector<double> resolve_weights(std::span<const double> weights, std::size_t n) {
  if (weights.empty()) return std::vector<double>(n, 1.0);
  if (weights.size() != n) throw Error(ErrorCode::invalid_input, "lasso: weight length mismatch");
  for (double w : weights)
    if (!(w >= 0.0) || !std::isfinite(w))
      throw Error(ErrorCode::invalid_input, "lasso: weights must be finite and non-negative");
  return {weights.begin(), weights.end()};
}

void check_labels(std::span<const double> y, std::span<const double> w, std::size_t n) {
  if (y.size() != n) throw Error(ErrorCode::invalid_input, "lasso: label length mismatch");
  bool pos = false, neg = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (y[i] != 0.0 && y[i] != 1.0)
      throw Error(ErrorCode::invalid_input, "lasso: labels must be 0 or 1");
    if (w[i] > 0) (y[i] == 1.0 ? pos : neg) = true;
  }
  if (!pos || !neg) throw Error(ErrorCode::no_contrast, "no contrast: labels contain a single class");
}

void check_finite(const FeatureMatrix& x) {
  for (const auto& c : x.columns())
    for (double v : c.values)
      if (!std::isfinite(v)) throw Error(ErrorCode::invalid_input, "lasso: non-finite covariate value");
}

struct Problem {
  const FeatureMatrix& x;
  std::span<const double> y;
  std::vector<double> w;
  double wsum = 0.0;
  std::vector<double> pf;
};

struct State {
  double intercept = 0.0;
  std::vector<double> beta;
  std::vector<double> eta;
};

State initial_state(const Problem& pr) {
  // Intercept-only optimum as the cold start.
  double ybar = 0.0;
  for (std::size_t i = 0; i < pr.y.size(); ++i) ybar += pr.w[i] * pr.y[i];
  ybar /= pr.wsum;
  State s;
  s.intercept = logit(ybar);
  s.beta.assign(pr.x.cols(), 0.0);
  s.eta.assign(pr.x.rows(), s.intercept);
  return s;
}

double objective(const Problem& pr, const State& s, double lambda) {
  double loss = 0.0;
  for (std::size_t i = 0; i < s.eta.size(); ++i)
    if (pr.w[i] > 0) loss += pr.w[i] * log_loss(s.eta[i], pr.y[i]);
  double pen = 0.0;
  for (std::size_t j = 0; j < s.beta.size(); ++j) pen += pr.pf[j] * std::abs(s.beta[j]);
  return loss / pr.wsum + lambda * pen;
}

struct SolveStats {
  int sweeps = 0;
  bool converged = false;
  double objective = 0.0;
};

SolveStats solve(const Problem& pr, double lambda, State& s, const LassoOptions& opt,
                 std::vector<double>* trace) {
  const std::size_t n = pr.x.rows();
  const std::size_t p = pr.x.cols();
  const double inv_w = 1.0 / pr.wsum;
  std::vector<double> v(n), g(n), d(n), curvature(p);
  std::vector<double> beta_old(p);

  SolveStats st;
  double obj = objective(pr, s, lambda);
  if (trace) trace->push_back(obj);

  while (st.sweeps < opt.max_sweeps) {
    // Quadratic model of the log-loss in eta around the current iterate.
    double vsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double pi = logistic(s.eta[i]);
      v[i] = pr.w[i] * std::max(pi * (1.0 - pi), 1e-5);
      g[i] = pr.w[i] * (pi - pr.y[i]);
      d[i] = 0.0;
      vsum += v[i];
    }
    for (std::size_t j = 0; j < p; ++j) {
      const auto& col = pr.x.column(j);
      double h = 0.0;
      for (std::size_t k = 0; k < col.rows.size(); ++k)
        h += v[col.rows[k]] * col.values[k] * col.values[k];
      curvature[j] = h * inv_w;
    }
    const double intercept_old = s.intercept;
    beta_old = s.beta;

    auto update = [&](std::size_t j) {
      const auto& col = pr.x.column(j);
      if (curvature[j] <= 0.0) return 0.0;
      double grad = 0.0;
      for (std::size_t k = 0; k < col.rows.size(); ++k) grad += col.values[k] * g[col.rows[k]];
      grad *= inv_w;
      const double updated =
          soft_threshold(curvature[j] * s.beta[j] - grad, lambda * pr.pf[j]) / curvature[j];
      const double delta = updated - s.beta[j];
      if (delta == 0.0) return 0.0;
      s.beta[j] = updated;
      for (std::size_t k = 0; k < col.rows.size(); ++k) {
        const auto r = col.rows[k];
        g[r] += v[r] * col.values[k] * delta;
        d[r] += col.values[k] * delta;
      }
      return std::abs(delta);
    };
    auto update_intercept = [&]() {
      const double grad = std::accumulate(g.begin(), g.end(), 0.0);
      const double delta = -grad / vsum;
      s.intercept += delta;
      for (std::size_t i = 0; i < n; ++i) {
        g[i] += v[i] * delta;
        d[i] += delta;
      }
      return std::abs(delta);
    };

    // Full sweeps alternate with sweeps restricted to the active set.
    bool stationary = false;
    bool first = true;
    while (st.sweeps < opt.max_sweeps) {
      double change = update_intercept();
      for (std::size_t j = 0; j < p; ++j) change = std::max(change, update(j));
      ++st.sweeps;
      if (change < opt.tolerance) {
        stationary = first;
        break;
      }
      first = false;
      while (st.sweeps < opt.max_sweeps) {
        double active_change = update_intercept();
        for (std::size_t j = 0; j < p; ++j)
          if (s.beta[j] != 0.0) active_change = std::max(active_change, update(j));
        ++st.sweeps;
        if (active_change < opt.tolerance) break;
      }
    }

    // Accept the quadratic-model step, halving it until the true objective
    // does not increase.
    const std::vector<double> eta_old = s.eta;
    const std::vector<double> beta_new = s.beta;
    const double intercept_new = s.intercept;
    double t = 1.0;
    double obj_new = 0.0;
    bool accepted = false;
    for (int halving = 0; halving < 50; ++halving) {
      for (std::size_t i = 0; i < n; ++i) s.eta[i] = eta_old[i] + t * d[i];
      for (std::size_t j = 0; j < p; ++j) s.beta[j] = beta_old[j] + t * (beta_new[j] - beta_old[j]);
      s.intercept = intercept_old + t * (intercept_new - intercept_old);
      obj_new = objective(pr, s, lambda);
      if (obj_new <= obj + 1e-15 * std::abs(obj)) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      s.eta = eta_old;
      s.beta = beta_old;
      s.intercept = intercept_old;
      st.converged = true;
      break;
    }

    double max_change = std::abs(s.intercept - intercept_old);
    for (std::size_t j = 0; j < p; ++j) max_change = std::max(max_change, std::abs(s.beta[j] - beta_old[j]));
    obj = obj_new;
    if (trace) trace->push_back(obj);
    if (stationary || max_change < opt.tolerance) {
      st.converged = true;
      break;
    }
  }
  // Refresh eta exactly to avoid drift from incremental updates.
  std::map<CovariateId, double> coef;
  for (std::size_t j = 0; j < p; ++j)
    if (s.beta[j] != 0.0) coef[pr.x.column(j).id] = s.beta[j];
  s.eta = pr.x.linear_predictor(s.intercept, coef);
  st.objective = objective(pr, s, lambda);
  return st;
}

SparseLinearModel to_model(const Problem& pr, const State& s, double lambda) {
  SparseLinearModel m;
  m.intercept = s.intercept;
  m.lambda = lambda;
  for (std::size_t j = 0; j < s.beta.size(); ++j)
    if (s.beta[j] != 0.0) m.coefficients[pr.x.column(j).id] = s.beta[j];
  m.meta.n = pr.x.rows();
  for (std::size_t i = 0; i < pr.y.size(); ++i)
    if (pr.y[i] == 1.0 && pr.w[i] > 0) ++m.meta.n_events;
  return m;
}

Problem make_problem(const FeatureMatrix& x, std::span<const double> y,
                     std::span<const double> weights) {
  Problem pr{x, y, resolve_weights(weights, x.rows()), 0.0, {}};
  check_labels(y, pr.w, x.rows());
  check_finite(x);
  pr.wsum = std::accumulate(pr.w.begin(), pr.w.end(), 0.0);
  pr.pf = penalty_factors(x, pr.w);
  return pr;
}

}  // namespace

std::vector<double> penalty_factors(const FeatureMatrix& x, std::span<const double> weights) {
  const auto w = resolve_weights(weights, x.rows());
  const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<double> pf(x.cols(), 1.0);
  for (std::size_t j = 0; j < x.cols(); ++j) {
    const auto& col = x.column(j);
    if (col.kind == CovariateKind::binary) continue;
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t k = 0; k < col.rows.size(); ++k) {
      m1 += w[col.rows[k]] * col.values[k];
      m2 += w[col.rows[k]] * col.values[k] * col.values[k];
    }
    m1 /= wsum;
    m2 /= wsum;
    const double var = m2 - m1 * m1;
    if (var > 0.0) pf[j] = std::sqrt(var);
  }
  return pf;
}

double penalized_objective(const FeatureMatrix& x, std::span<const double> y,
                           std::span<const double> weights, double intercept,
                           std::span<const double> beta, double lambda) {
  Problem pr{x, y, resolve_weights(weights, x.rows()), 0.0, {}};
  pr.wsum = std::accumulate(pr.w.begin(), pr.w.end(), 0.0);
  pr.pf = penalty_factors(x, pr.w);
  if (beta.size() != x.cols()) throw Error(ErrorCode::invalid_input, "objective: beta size mismatch");
  State s{intercept, {beta.begin(), beta.end()}, {}};
  std::map<CovariateId, double> coef;
  for (std::size_t j = 0; j < beta.size(); ++j) coef[x.column(j).id] = beta[j];
  s.eta = x.linear_predictor(intercept, coef);
  return objective(pr, s, lambda);
}

double lambda_max(const FeatureMatrix& x, std::span<const double> y, std::span<const double> weights) {
  const auto w = resolve_weights(weights, x.rows());
  const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
  double ybar = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) ybar += w[i] * y[i];
  ybar /= wsum;
  const auto pf = penalty_factors(x, w);
  double best = 0.0;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    const auto& col = x.column(j);
    double s = 0.0;
    for (std::size_t k = 0; k < col.rows.size(); ++k)
      s += col.values[k] * w[col.rows[k]] * (y[col.rows[k]] - ybar);
    best = std::max(best, std::abs(s) / (wsum * pf[j]));
  }
  return best;
}

LassoFit fit_logistic_lasso(const FeatureMatrix& x, std::span<const double> y, double lambda,
                            std::span<const double> weights, const LassoOptions& options) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw Error(ErrorCode::invalid_input, "lasso: lambda must be finite and >= 0");
  const auto pr = make_problem(x, y, weights);
  State s = initial_state(pr);
  LassoFit fit;
  auto st = solve(pr, lambda, s, options, options.trace_objective ? &fit.objective_trace : nullptr);
  fit.model = to_model(pr, s, lambda);
  fit.sweeps = st.sweeps;
  fit.converged = st.converged;
  fit.objective = st.objective;
  return fit;
}

namespace {

std::vector<int> stratified_folds(std::span<const double> y, int folds, std::uint64_t seed) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < y.size(); ++i) (y[i] == 1.0 ? pos : neg).push_back(i);
  KeyedStream rng(seed, 0, 0xf01d);
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);
  std::vector<int> fold(y.size());
  std::size_t k = 0;
  for (auto i : pos) fold[i] = static_cast<int>(k++ % folds);
  for (auto i : neg) fold[i] = static_cast<int>(k++ % folds);
  return fold;
}

bool folds_have_contrast(std::span<const double> y, const std::vector<int>& fold, int folds) {
  std::vector<int> pos(folds, 0), neg(folds, 0);
  for (std::size_t i = 0; i < y.size(); ++i) (y[i] == 1.0 ? pos : neg)[fold[i]]++;
  int total_pos = std::accumulate(pos.begin(), pos.end(), 0);
  int total_neg = std::accumulate(neg.begin(), neg.end(), 0);
  for (int f = 0; f < folds; ++f) {
    if (pos[f] == 0 || neg[f] == 0) return false;
    if (total_pos - pos[f] == 0 || total_neg - neg[f] == 0) return false;
  }
  return true;
}

}  // namespace

CvResult cv_select_lambda(const FeatureMatrix& x, std::span<const double> y, int folds,
                          std::span<const double> grid, std::uint64_t seed,
                          const LassoOptions& options) {
  if (folds < 2) throw Error(ErrorCode::invalid_input, "cv: folds must be >= 2");
  make_problem(x, y, {});  // validates labels and values
  CvResult res;
  res.grid = grid.empty() ? default_lambda_grid(lambda_max(x, y)) : std::vector<double>(grid.begin(), grid.end());

  res.seed_used = seed;
  res.fold_of_row = stratified_folds(y, folds, seed);
  if (!folds_have_contrast(y, res.fold_of_row, folds)) {
    res.seed_used = seed + 1;
    res.fold_of_row = stratified_folds(y, folds, res.seed_used);
    if (!folds_have_contrast(y, res.fold_of_row, folds))
      throw Error(ErrorCode::no_contrast, "cv: a fold has single-class labels after refolding");
  }

  if (res.grid.size() == 1) {
    res.lambda_star = res.grid[0];
    res.index = 0;
    res.mean_loglik.assign(1, std::numeric_limits<double>::quiet_NaN());
    return res;
  }

  res.mean_loglik.assign(res.grid.size(), 0.0);
  for (int f = 0; f < folds; ++f) {
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < y.size(); ++i) (res.fold_of_row[i] == f ? test : train).push_back(i);
    const auto xtr = x.select_rows(train);
    const auto xte = x.select_rows(test);
    std::vector<double> ytr, yte;
    for (auto i : train) ytr.push_back(y[i]);
    for (auto i : test) yte.push_back(y[i]);
    const auto pr = make_problem(xtr, ytr, {});
    State s = initial_state(pr);
    for (std::size_t g = 0; g < res.grid.size(); ++g) {
      solve(pr, res.grid[g], s, options, nullptr);
      const auto model = to_model(pr, s, res.grid[g]);
      const auto eta = xte.linear_predictor(model.intercept, model.coefficients);
      double ll = 0.0;
      for (std::size_t i = 0; i < eta.size(); ++i) ll -= log_loss(eta[i], yte[i]);
      res.mean_loglik[g] += ll / static_cast<double>(eta.size()) / folds;
    }
  }
  res.index = 0;
  for (std::size_t g = 1; g < res.grid.size(); ++g)
    if (res.mean_loglik[g] > res.mean_loglik[res.index]) res.index = g;
  res.lambda_star = res.grid[res.index];
  return res;
}

SparseLinearModel fit_lasso_cv(const FeatureMatrix& x, std::span<const double> y, int folds,
                               std::span<const double> grid, std::uint64_t seed,
                               const LassoOptions& options) {
  auto cv = cv_select_lambda(x, y, folds, grid, seed, options);
  const auto pr = make_problem(x, y, {});
  State s = initial_state(pr);
  for (std::size_t g = 0; g <= cv.index; ++g) solve(pr, cv.grid[g], s, options, nullptr);
  auto model = to_model(pr, s, cv.lambda_star);
  model.meta.fold_likelihoods = std::move(cv.mean_loglik);
  model.meta.lambda_grid = std::move(cv.grid);
  return model;
}

std::vector<double> predict_proba(const SparseLinearModel& model, const FeatureMatrix& x) {
  auto eta = x.linear_predictor(model.intercept, model.coefficients);
  for (auto& e : eta) e = logistic(e);
  return eta;
}

namespace {

// 1-based midranks of `values`.
std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  std::vector<double> rank(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) rank[order[k]] = r;
    i = j;
  }
  return rank;
}

double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

}  // namespace

CStatistic c_statistic(std::span<const double> pred, std::span<const double> labels) {
  if (pred.size() != labels.size()) throw Error(ErrorCode::invalid_input, "c-statistic: length mismatch");
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < pred.size(); ++i) (labels[i] == 1.0 ? pos : neg).push_back(pred[i]);
  if (pos.empty() || neg.empty())
    throw Error(ErrorCode::no_contrast, "no contrast: c-statistic needs both classes");
  const double n1 = static_cast<double>(pos.size());
  const double n0 = static_cast<double>(neg.size());

  const auto r_all = midranks(pred);
  const auto r_pos = midranks(pos);
  const auto r_neg = midranks(neg);
  std::vector<double> v10, v01;
  v10.reserve(pos.size());
  v01.reserve(neg.size());
  std::size_t ip = 0, in = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (labels[i] == 1.0) {
      v10.push_back((r_all[i] - r_pos[ip++]) / n0);
    } else {
      v01.push_back(1.0 - (r_all[i] - r_neg[in++]) / n1);
    }
  }
  CStatistic c;
  c.value = std::accumulate(v10.begin(), v10.end(), 0.0) / n1;
  c.se = std::sqrt(sample_variance(v10) / n1 + sample_variance(v01) / n0);
  c.lo = std::max(0.0, c.value - 1.959963984540054 * c.se);
  c.hi = std::min(1.0, c.value + 1.959963984540054 * c.se);
  return c;
}

Calibration calibration_metrics(std::span<const double> pred, std::span<const double> labels) {
  if (pred.size() != labels.size()) throw Error(ErrorCode::invalid_input, "calibration: length mismatch");
  bool pos = false, neg = false;
  for (double y : labels) (y == 1.0 ? pos : neg) = true;
  if (!pos || !neg) throw Error(ErrorCode::no_contrast, "no contrast: calibration needs both classes");
  std::vector<double> lp(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!(pred[i] > 0.0 && pred[i] < 1.0))
      throw Error(ErrorCode::invalid_input, "calibration: predictions must lie in (0, 1)");
    lp[i] = logit(pred[i]);
  }
  if (std::all_of(lp.begin(), lp.end(), [&](double v) { return v == lp[0]; }))
    throw Error(ErrorCode::degenerate, "calibration: all predictions are equal");

  auto loglik = [&](double a, double b, bool offset) {
    double ll = 0.0;
    for (std::size_t i = 0; i < lp.size(); ++i) ll -= log_loss(a + (offset ? lp[i] : b * lp[i]), labels[i]);
    return ll;
  };

  Calibration cal;
  // Two-parameter Newton for (intercept, slope).
  double a = 0.0, b = 1.0;
  double ll = loglik(a, b, false);
  for (int it = 0; it < 100; ++it) {
    double ga = 0, gb = 0, haa = 0, hab = 0, hbb = 0;
    for (std::size_t i = 0; i < lp.size(); ++i) {
      const double p = logistic(a + b * lp[i]);
      const double r = labels[i] - p;
      const double w = p * (1 - p);
      ga += r;
      gb += r * lp[i];
      haa += w;
      hab += w * lp[i];
      hbb += w * lp[i] * lp[i];
    }
    const double det = haa * hbb - hab * hab;
    if (!(det > 0)) break;
    double da = (hbb * ga - hab * gb) / det;
    double db = (haa * gb - hab * ga) / det;
    double step = 1.0;
    double next = loglik(a + da, b + db, false);
    while (next < ll && step > 1e-10) {
      step *= 0.5;
      next = loglik(a + step * da, b + step * db, false);
    }
    a += step * da;
    b += step * db;
    const bool done = std::abs(step * da) < 1e-10 && std::abs(step * db) < 1e-10;
    ll = next;
    if (done) break;
  }
  cal.slope = b;

  double c0 = 0.0;
  for (int it = 0; it < 100; ++it) {
    double g = 0, h = 0;
    for (std::size_t i = 0; i < lp.size(); ++i) {
      const double p = logistic(c0 + lp[i]);
      g += labels[i] - p;
      h += p * (1 - p);
    }
    const double delta = g / h;
    c0 += delta;
    if (std::abs(delta) < 1e-12) break;
  }
  cal.intercept = c0;
  return cal;
}

PerformanceSummary summarize_performance(std::string population, std::span<const double> pred,
                                         std::span<const double> labels) {
  PerformanceSummary s;
  s.population = std::move(population);
  s.n = pred.size();
  for (double y : labels) s.n_events += y == 1.0 ? 1 : 0;
  try {
    s.c = c_statistic(pred, labels);
    s.valid = true;
  } catch (const Error& e) {
    s.valid = false;
    s.note = e.what();
    return s;
  }
  try {
    s.calibration = calibration_metrics(pred, labels);
  } catch (const Error& e) {
    s.note = e.what();
  }
  return s;
}

nlohmann::json to_json(const SparseLinearModel& model) {
  nlohmann::json coefs = nlohmann::json::array();
  for (const auto& [id, beta] : model.coefficients)
    coefs.push_back({{"covariate_id", id}, {"beta", beta}});
  return {{"intercept", model.intercept}, {"lambda", model.lambda}, {"coefficients", coefs}};
}

SparseLinearModel model_from_json(const nlohmann::json& j) {
  SparseLinearModel m;
  try {
    m.intercept = j.at("intercept").get<double>();
    m.lambda = j.value("lambda", 0.0);
    for (const auto& c : j.at("coefficients")) {
      const double beta = c.at("beta").get<double>();
      if (beta != 0.0) m.coefficients[c.at("covariate_id").get<CovariateId>()] = beta;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_input, std::string("model.json: ") + e.what());
  }
  return m;
}

nlohmann::json to_json(const PerformanceSummary& p) {
  nlohmann::json j = {{"population", p.population}, {"n", p.n}, {"n_events", p.n_events},
                      {"valid", p.valid}};
  if (p.valid) {
    j["c_statistic"] = p.c.value;
    j["c_statistic_ci95"] = {p.c.lo, p.c.hi};
    j["c_statistic_ci_method"] = "asymptotic (DeLong)";
    j["calibration_intercept"] = p.calibration ? nlohmann::json(p.calibration->intercept) : nlohmann::json();
    j["calibration_slope"] = p.calibration ? nlohmann::json(p.calibration->slope) : nlohmann::json();
  }
  if (!p.note.empty()) j["note"] = p.note;
  return j;
}

}  // namespace riskstrat
