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

#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "riskstrat/error.hpp"
#include "riskstrat/lasso.hpp"

using namespace riskstrat;

namespace {

struct Instance {
  FeatureMatrix x;
  oracle::DenseProblem dense;
};

// Random mixed binary / continuous design with labels from a sparse logistic model.
Instance random_instance(std::mt19937_64& rng, std::size_t n, std::size_t p) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  Instance inst;
  auto& d = inst.dense;
  d.n = n;
  d.p = p;
  d.x.assign(n * p, 0.0);
  std::vector<CovariateKind> kinds(p);
  for (std::size_t j = 0; j < p; ++j) kinds[j] = u(rng) < 0.5 ? CovariateKind::binary : CovariateKind::continuous;
  std::vector<double> beta(p);
  for (auto& b : beta) b = g(rng);
  for (std::size_t i = 0; i < n; ++i) {
    double eta = -0.3;
    for (std::size_t j = 0; j < p; ++j) {
      const double v = kinds[j] == CovariateKind::binary ? (u(rng) < 0.4 ? 1.0 : 0.0) : 2.0 * g(rng) + 1.0;
      d.x[i * p + j] = v;
      eta += beta[j] * v;
    }
    d.y.push_back(u(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0);
  }
  d.y[0] = 1.0;
  d.y[1] = 0.0;
  d.w.assign(n, 1.0);
  inst.x = FeatureMatrix::from_dense(n, p, d.x, kinds);
  // Dense penalty scales computed independently: population SD for continuous columns.
  d.pf.assign(p, 1.0);
  for (std::size_t j = 0; j < p; ++j) {
    if (kinds[j] == CovariateKind::binary) continue;
    double m = 0, m2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      m += d.x[i * p + j];
      m2 += d.x[i * p + j] * d.x[i * p + j];
    }
    m /= n;
    d.pf[j] = std::sqrt(m2 / n - m * m);
  }
  return inst;
}

std::vector<double> dense_beta(const SparseLinearModel& m, const FeatureMatrix& x) {
  std::vector<double> b(x.cols(), 0.0);
  for (std::size_t j = 0; j < x.cols(); ++j)
    if (auto it = m.coefficients.find(x.column(j).id); it != m.coefficients.end()) b[j] = it->second;
  return b;
}

}  // namespace

TEST_SUITE("lasso-glm") {
  TEST_CASE("huge penalty gives the intercept-only model") {
    std::mt19937_64 rng(1);
    auto inst = random_instance(rng, 40, 3);
    std::vector<double> w(40);
    for (std::size_t i = 0; i < 40; ++i) w[i] = 0.5 + (i % 3);
    const auto fit = fit_logistic_lasso(inst.x, inst.dense.y, 1e6, w);
    CHECK(fit.model.coefficients.empty());
    double sw = 0, swy = 0;
    for (std::size_t i = 0; i < 40; ++i) {
      sw += w[i];
      swy += w[i] * inst.dense.y[i];
    }
    CHECK(fit.model.intercept == doctest::Approx(logit(swy / sw)).epsilon(1e-8));
  }

  TEST_CASE("objective matches an independent projected-gradient oracle") {
    std::mt19937_64 rng(2024);
    for (int rep = 0; rep < 5; ++rep) {
      auto inst = random_instance(rng, 20, 3);
      const double lam = 0.02 + 0.03 * rep;
      const auto fit = fit_logistic_lasso(inst.x, inst.dense.y, lam);
      const double ours =
          oracle::objective(inst.dense, fit.model.intercept, dense_beta(fit.model, inst.x), lam);
      const double ref = oracle::projected_gradient_lasso(inst.dense, lam);
      CHECK(ours - ref <= 1e-6);
      CHECK(fit.objective == doctest::Approx(ours).epsilon(1e-12));
    }
  }

  TEST_CASE("solution satisfies the optimality conditions") {
    std::mt19937_64 rng(7);
    auto inst = random_instance(rng, 50, 5);
    const double lam = 0.03;
    const auto fit = fit_logistic_lasso(inst.x, inst.dense.y, lam, {}, {1e-10, 10000, false});
    const auto beta = dense_beta(fit.model, inst.x);
    const auto& d = inst.dense;
    std::vector<double> grad(d.p, 0.0);
    double g0 = 0.0;
    for (std::size_t i = 0; i < d.n; ++i) {
      double eta = fit.model.intercept;
      for (std::size_t j = 0; j < d.p; ++j) eta += d.x[i * d.p + j] * beta[j];
      const double r = (1.0 / (1.0 + std::exp(-eta)) - d.y[i]) / static_cast<double>(d.n);
      g0 += r;
      for (std::size_t j = 0; j < d.p; ++j) grad[j] += r * d.x[i * d.p + j];
    }
    CHECK(std::abs(g0) < 1e-6);
    for (std::size_t j = 0; j < d.p; ++j) {
      if (beta[j] == 0.0) CHECK(std::abs(grad[j]) <= lam * d.pf[j] + 1e-6);
      else CHECK(grad[j] == doctest::Approx(-lam * d.pf[j] * (beta[j] > 0 ? 1 : -1)).epsilon(1e-4));
    }
  }

  TEST_CASE("log-loss gradient agrees with central differences") {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> g(0.0, 0.5);
    auto inst = random_instance(rng, 30, 3);
    const auto& d = inst.dense;
    for (int k = 0; k < 20; ++k) {
      std::vector<double> beta{g(rng), g(rng), g(rng)};
      const double b0 = g(rng);
      std::vector<double> grad(3, 0.0);
      for (std::size_t i = 0; i < d.n; ++i) {
        double eta = b0;
        for (std::size_t j = 0; j < 3; ++j) eta += d.x[i * 3 + j] * beta[j];
        const double r = (logistic(eta) - d.y[i]) / static_cast<double>(d.n);
        for (std::size_t j = 0; j < 3; ++j) grad[j] += r * d.x[i * 3 + j];
      }
      for (std::size_t j = 0; j < 3; ++j) {
        const double h = 1e-5;
        auto bp = beta, bm = beta;
        bp[j] += h;
        bm[j] -= h;
        const double fd = (penalized_objective(inst.x, d.y, {}, b0, bp, 0.0) -
                           penalized_objective(inst.x, d.y, {}, b0, bm, 0.0)) /
                          (2 * h);
        CHECK(std::abs(fd - grad[j]) <= 1e-5 * std::max(1.0, std::abs(grad[j])));
      }
    }
  }

  TEST_CASE("objective never increases across outer iterations") {
    std::mt19937_64 rng(5);
    auto inst = random_instance(rng, 50, 5);
    LassoOptions opt;
    opt.trace_objective = true;
    const auto fit = fit_logistic_lasso(inst.x, inst.dense.y, 0.01, {}, opt);
    REQUIRE(fit.objective_trace.size() >= 2);
    for (std::size_t i = 1; i < fit.objective_trace.size(); ++i)
      CHECK(fit.objective_trace[i] <= fit.objective_trace[i - 1] + 1e-15);
    CHECK(fit.converged);
  }

  TEST_CASE("duplicating every row leaves the fit unchanged") {
    std::mt19937_64 rng(3);
    auto inst = random_instance(rng, 30, 4);
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < 30; ++i) rows.push_back(i);
    for (std::size_t i = 0; i < 30; ++i) rows.push_back(i);
    std::vector<double> y2 = inst.dense.y;
    y2.insert(y2.end(), inst.dense.y.begin(), inst.dense.y.end());
    const auto a = fit_logistic_lasso(inst.x, inst.dense.y, 0.02);
    const auto b = fit_logistic_lasso(inst.x.select_rows(rows), y2, 0.02);
    CHECK(a.model.intercept == doctest::Approx(b.model.intercept).epsilon(1e-6));
    for (const auto& [id, v] : a.model.coefficients) CHECK(b.model.coefficients.at(id) == doctest::Approx(v).epsilon(1e-6));
  }

  TEST_CASE("single-class labels and non-finite values are errors") {
    const std::vector<double> xs{1, 0, 1, 0};
    const auto x = FeatureMatrix::from_dense(4, 1, xs);
    try {
      fit_logistic_lasso(x, std::vector<double>{1, 1, 1, 1}, 0.1);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::no_contrast);
      CHECK(std::string(e.what()).find("no contrast") != std::string::npos);
    }
    const std::vector<double> bad{1, NAN, 1, 0};
    const std::vector<CovariateKind> cont{CovariateKind::continuous};
    CHECK_THROWS_AS(fit_logistic_lasso(FeatureMatrix::from_dense(4, 1, bad, cont), std::vector<double>{1, 0, 1, 0}, 0.1),
                    Error);
  }

  TEST_CASE("cross-validation selection rules") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t n = 400;
    std::vector<double> xs(n * 3), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < 3; ++j) xs[i * 3 + j] = u(rng) < 0.5 ? 1.0 : 0.0;
      y[i] = u(rng) < (xs[i * 3] == 1.0 ? 0.85 : 0.15) ? 1.0 : 0.0;
    }
    const auto x = FeatureMatrix::from_dense(n, 3, xs);

    SUBCASE("a one-value grid returns that value") {
      const std::vector<double> grid{0.05};
      CHECK(cv_select_lambda(x, y, 3, grid, 1).lambda_star == 0.05);
    }
    SUBCASE("a predictive covariate selects below lambda_max") {
      const double lmax = lambda_max(x, y);
      double ybar = 0;
      for (double v : y) ybar += v;
      ybar /= n;
      double s = 0;
      for (std::size_t i = 0; i < n; ++i) s += xs[i * 3] * (y[i] - ybar);
      CHECK(lmax >= std::abs(s) / n - 1e-15);
      CHECK(cv_select_lambda(x, y, 3, {}, 1).lambda_star < lmax);
      CHECK(fit_logistic_lasso(x, y, lmax * (1 + 1e-9)).model.coefficients.empty());
      CHECK_FALSE(fit_logistic_lasso(x, y, lmax * 0.99).model.coefficients.empty());
    }
    SUBCASE("folds preserve prevalence") {
      const auto cv = cv_select_lambda(x, y, 3, {}, 5);
      std::vector<double> pos(3, 0), tot(3, 0);
      for (std::size_t i = 0; i < n; ++i) {
        pos[static_cast<std::size_t>(cv.fold_of_row[i])] += y[i];
        tot[static_cast<std::size_t>(cv.fold_of_row[i])] += 1;
      }
      for (int f = 0; f < 3; ++f) CHECK(std::abs(tot[f] - n / 3.0) <= 1.0);
      const double max_pos = *std::max_element(pos.begin(), pos.end());
      const double min_pos = *std::min_element(pos.begin(), pos.end());
      CHECK(max_pos - min_pos <= 1.0);
    }
  }

  TEST_CASE("pure-noise labels usually select the largest penalty") {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int at_top = 0;
    const int seeds = 200;
    for (int s = 0; s < seeds; ++s) {
      const std::size_t n = 300;
      std::vector<double> xs(n * 5), y(n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < 5; ++j) xs[i * 5 + j] = u(rng) < 0.3 ? 1.0 : 0.0;
        y[i] = u(rng) < 0.3 ? 1.0 : 0.0;
      }
      const auto x = FeatureMatrix::from_dense(n, 5, xs);
      const auto cv = cv_select_lambda(x, y, 3, {}, static_cast<std::uint64_t>(s));
      if (cv.index == 0) ++at_top;
    }
    MESSAGE("largest penalty chosen in ", at_top, " of ", seeds, " seeds");
    CHECK(at_top >= 0.8 * seeds);
  }

  TEST_CASE("prediction") {
    const std::vector<double> xs{1, 0, 0, 1, 1, 1};
    const auto x = FeatureMatrix::from_dense(3, 2, xs);
    SparseLinearModel zero;
    for (double p : predict_proba(zero, x)) CHECK(p == 0.5);
    SparseLinearModel m;
    m.intercept = -1.0;
    m.coefficients = {{0, 0.5}, {1, 2.0}, {42, 9.0}};
    const auto p = predict_proba(m, x);
    CHECK(p[0] == doctest::Approx(1.0 / (1.0 + std::exp(0.5))));
    CHECK(p[1] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
    CHECK(p[2] == doctest::Approx(1.0 / (1.0 + std::exp(-1.5))));
    m.intercept = -800.0;
    for (double v : predict_proba(m, x)) CHECK(v < 1e-300);
  }

  TEST_CASE("c-statistic") {
    const std::vector<double> pred{0.1, 0.4, 0.35, 0.8}, y{0, 0, 1, 1};
    CHECK(c_statistic(pred, y).value == doctest::Approx(0.75));
    CHECK(c_statistic(pred, y).value == doctest::Approx(oracle::pair_count_c(pred, y)));
    CHECK(c_statistic(std::vector<double>{0.3, 0.3, 0.3, 0.3}, y).value == 0.5);
    CHECK(c_statistic(y, y).value == 1.0);
    CHECK_THROWS_AS(c_statistic(pred, std::vector<double>{1, 1, 1, 1}), Error);

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> p(300), l(300), tp(300);
    for (std::size_t i = 0; i < 300; ++i) {
      p[i] = std::round(u(rng) * 50) / 50;
      l[i] = u(rng) < p[i] ? 1 : 0;
      tp[i] = std::exp(3 * p[i]) - 7;
    }
    const auto c = c_statistic(p, l);
    CHECK(c.value == doctest::Approx(oracle::pair_count_c(p, l)).epsilon(1e-12));
    CHECK(c_statistic(tp, l).value == c.value);
    CHECK(c.lo <= c.value);
    CHECK(c.value <= c.hi);
    CHECK(c.se > 0);
  }

  TEST_CASE("calibration") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t n = 10000;
    std::vector<double> p(n), y(n), y2(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = 0.05 + 0.9 * u(rng);
      y[i] = u(rng) < p[i] ? 1 : 0;
      y2[i] = u(rng) < p[i] * p[i] ? 1 : 0;
    }
    const auto c = calibration_metrics(p, y);
    CHECK(std::abs(c.slope - 1.0) < 0.1);
    CHECK(std::abs(c.intercept) < 0.1);
    // Outcomes generated from p^2 while predicting p: the refit slope moves away from 1.
    const auto c2 = calibration_metrics(p, y2);
    CHECK(std::abs(c2.slope - 1.0) > 0.2);
    CHECK_THROWS_AS(calibration_metrics(std::vector<double>(4, 0.3), std::vector<double>{0, 1, 0, 1}), Error);
  }

  TEST_CASE("performance summary flags single-class populations") {
    const auto s = summarize_performance("Treatment", std::vector<double>{0.2, 0.4}, std::vector<double>{0, 0});
    CHECK_FALSE(s.valid);
    CHECK_FALSE(s.note.empty());
  }

  TEST_CASE("model json round-trips") {
    SparseLinearModel m;
    m.intercept = -1.25;
    m.lambda = 0.01;
    m.coefficients = {{3, 0.5}, {10, -2.0}};
    const auto j = to_json(m);
    CHECK(j.at("coefficients").size() == 2);
    const auto back = model_from_json(j);
    CHECK(back.intercept == m.intercept);
    CHECK(back.lambda == m.lambda);
    CHECK(back.coefficients == m.coefficients);
  }
}
