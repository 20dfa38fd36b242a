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

// Independent reference computations used only by tests. None of these share
// code with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

namespace oracle {

struct DenseProblem {
  std::size_t n = 0, p = 0;
  std::vector<double> x;  // row-major n x p
  std::vector<double> y;
  std::vector<double> w;
  std::vector<double> pf;  // penalty scale per column
};

inline double log1pexp(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

/// (1/sum w) sum w logloss + lambda sum pf |beta|.
inline double objective(const DenseProblem& d, double b0, const std::vector<double>& beta, double lambda) {
  double sw = 0.0, loss = 0.0;
  for (std::size_t i = 0; i < d.n; ++i) {
    double eta = b0;
    for (std::size_t j = 0; j < d.p; ++j) eta += d.x[i * d.p + j] * beta[j];
    loss += d.w[i] * (log1pexp(eta) - d.y[i] * eta);
    sw += d.w[i];
  }
  double pen = 0.0;
  for (std::size_t j = 0; j < d.p; ++j) pen += d.pf[j] * std::abs(beta[j]);
  return loss / sw + lambda * pen;
}

/// Accelerated projected gradient on the split form beta = u - v, u, v >= 0,
/// where the penalty becomes linear. Returns the objective at the solution.
inline double projected_gradient_lasso(const DenseProblem& d, double lambda, std::vector<double>* beta_out = nullptr,
                                       int max_iter = 400000) {
  const std::size_t m = 1 + 2 * d.p;  // b0, u, v
  double sw = 0.0, frob = 0.0;
  for (std::size_t i = 0; i < d.n; ++i) {
    sw += d.w[i];
    double r = 1.0;
    for (std::size_t j = 0; j < d.p; ++j) r += d.x[i * d.p + j] * d.x[i * d.p + j];
    frob += d.w[i] * r;
  }
  // Hessian of the smooth part in (b0, u, v) is bounded by 2 * 0.25 * ||[1 X -X]||^2 / sum w.
  const double lip = 2.0 * 0.25 * frob / sw * 2.0;
  const double step = 1.0 / lip;
  std::vector<double> z(m, 0.0), zprev(m, 0.0), yk(m, 0.0), g(m);
  auto unpack = [&](const std::vector<double>& v, double& b0, std::vector<double>& beta) {
    b0 = v[0];
    beta.assign(d.p, 0.0);
    for (std::size_t j = 0; j < d.p; ++j) beta[j] = v[1 + j] - v[1 + d.p + j];
  };
  auto full_obj = [&](const std::vector<double>& v) {
    double b0;
    std::vector<double> beta;
    unpack(v, b0, beta);
    return objective(d, b0, beta, lambda);
  };
  double t = 1.0;
  double prev_obj = full_obj(z);
  for (int it = 0; it < max_iter; ++it) {
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t i = 0; i < d.n; ++i) {
      double eta = yk[0];
      for (std::size_t j = 0; j < d.p; ++j) eta += d.x[i * d.p + j] * (yk[1 + j] - yk[1 + d.p + j]);
      const double r = d.w[i] * (1.0 / (1.0 + std::exp(-eta)) - d.y[i]) / sw;
      g[0] += r;
      for (std::size_t j = 0; j < d.p; ++j) {
        g[1 + j] += r * d.x[i * d.p + j];
        g[1 + d.p + j] -= r * d.x[i * d.p + j];
      }
    }
    for (std::size_t j = 0; j < d.p; ++j) {
      g[1 + j] += lambda * d.pf[j];
      g[1 + d.p + j] += lambda * d.pf[j];
    }
    zprev = z;
    z[0] = yk[0] - step * g[0];
    for (std::size_t k = 1; k < m; ++k) z[k] = std::max(0.0, yk[k] - step * g[k]);
    const double obj = full_obj(z);
    // Adaptive restart keeps the iteration monotone.
    if (obj > prev_obj) {
      t = 1.0;
      yk = zprev;
      z = zprev;
      continue;
    }
    const double tn = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
    for (std::size_t k = 0; k < m; ++k) yk[k] = z[k] + (t - 1.0) / tn * (z[k] - zprev[k]);
    t = tn;
    double diff = 0.0;
    for (std::size_t k = 0; k < m; ++k) diff = std::max(diff, std::abs(z[k] - zprev[k]));
    prev_obj = obj;
    if (diff < 1e-13 && it > 100) break;
  }
  if (beta_out) {
    double b0;
    unpack(z, b0, *beta_out);
  }
  return full_obj(z);
}

/// Efron partial log-likelihood, single stratum, computed by direct sums.
inline double cox_loglik(const std::vector<double>& time, const std::vector<int>& event, const std::vector<double>& x,
                         double beta) {
  double ll = 0.0;
  std::vector<double> distinct;
  for (std::size_t i = 0; i < time.size(); ++i)
    if (event[i]) distinct.push_back(time[i]);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  for (double t : distinct) {
    double risk = 0.0, tied = 0.0, xs = 0.0;
    int d = 0;
    for (std::size_t i = 0; i < time.size(); ++i) {
      if (time[i] >= t) risk += std::exp(beta * x[i]);
      if (time[i] == t && event[i]) {
        tied += std::exp(beta * x[i]);
        xs += x[i];
        ++d;
      }
    }
    ll += beta * xs;
    for (int l = 0; l < d; ++l) ll -= std::log(risk - static_cast<double>(l) / d * tied);
  }
  return ll;
}

/// Nested grid search maximizer of a 1-D concave function.
template <class F>
double grid_maximize(F f, double lo, double hi, double tol = 1e-9) {
  double step = (hi - lo) / 1000.0;
  double best = lo, best_val = f(lo);
  while (true) {
    for (double b = lo; b <= hi + 1e-15; b += step) {
      const double v = f(b);
      if (v > best_val) {
        best_val = v;
        best = b;
      }
    }
    if (step < tol) return best;
    lo = best - step;
    hi = best + step;
    step /= 20.0;
  }
}

/// One-sample Kolmogorov-Smirnov test against Uniform(0, 1); returns the p-value.
inline double ks_uniform_p(std::vector<double> u) {
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double dstat = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dstat = std::max(dstat, (static_cast<double>(i) + 1.0) / n - u[i]);
    dstat = std::max(dstat, u[i] - static_cast<double>(i) / n);
  }
  const double sq = std::sqrt(n);
  const double lam = (sq + 0.12 + 0.11 / sq) * dstat;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lam * lam);
  return std::clamp(p, 0.0, 1.0);
}

inline std::vector<double> midranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && v[idx[j]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k < j; ++k) r[idx[k]] = (static_cast<double>(i + j) + 1.0) / 2.0;
    i = j;
  }
  return r;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  return pearson(midranks(a), midranks(b));
}

/// Exhaustive pair count of P(pred_pos > pred_neg) + 0.5 P(tie).
inline double pair_count_c(const std::vector<double>& pred, const std::vector<double>& y) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    for (std::size_t j = 0; j < pred.size(); ++j)
      if (y[i] == 1.0 && y[j] == 0.0) {
        den += 1.0;
        num += pred[i] > pred[j] ? 1.0 : pred[i] == pred[j] ? 0.5 : 0.0;
      }
  return num / den;
}

}  // namespace oracle
