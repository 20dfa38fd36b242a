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

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "riskstrat/error.hpp"
#include "riskstrat/risk_stratifier.hpp"
#include "riskstrat/simulator.hpp"

using namespace riskstrat;

namespace {

SimulationSpec outcome_scenario(std::map<int, double> gamma, std::uint64_t seed) {
  SimulationSpec spec;
  spec.n_subjects = 8000;
  spec.n_binary_covariates = 12;
  spec.covariate_prevalences = {0.3};
  spec.treatment_intercept = -0.2;
  spec.treatment_coefficients = {{1, 0.3}, {4, -0.3}};
  OutcomeModelSpec o;
  o.baseline_log_hazard = -7.8;
  o.covariate_log_hazard = std::move(gamma);
  o.prior_rate = 0.03;
  spec.outcomes = {o};
  spec.seed = seed;
  return spec;
}

std::vector<double> predicted_for(const SparseLinearModel& m, const CovariateTable& cov,
                                  const std::vector<SubjectId>& ids) {
  return predict_proba(m, FeatureMatrix::from_table(cov, ids));
}

}  // namespace

TEST_SUITE("risk-stratifier") {
  TEST_CASE("quantile cut of eight distinct risks") {
    const std::vector<SubjectId> ids{1, 2, 3, 4, 5, 6, 7, 8};
    const std::vector<double> p{0.8, 0.1, 0.4, 0.3, 0.7, 0.2, 0.6, 0.5};
    const auto s = assign_risk_strata(ids, p, 4);
    std::vector<int> size(4, 0);
    for (int a : s.assignment) ++size[static_cast<std::size_t>(a - 1)];
    CHECK(size == std::vector<int>{2, 2, 2, 2});
    REQUIRE(s.boundaries.size() == 3);
    CHECK(s.boundaries[0] < s.boundaries[1]);
    CHECK(s.boundaries[1] < s.boundaries[2]);
    CHECK(s.members(1) == std::vector<SubjectId>{2, 6});
    CHECK(s.members(4) == std::vector<SubjectId>{1, 5});
  }

  TEST_CASE("degenerate predictions") {
    const std::vector<SubjectId> ids{1, 2, 3};
    const std::vector<double> same(3, 0.2);
    try {
      assign_risk_strata(ids, same, 2);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::degenerate);
      CHECK(std::string(e.what()).find("reduce risk_strata_count") != std::string::npos);
    }
    CHECK_THROWS_AS(assign_risk_strata(ids, std::vector<double>{0.1, 0.2, 0.3}, 1), Error);
    CHECK_THROWS_AS(assign_risk_strata({}, {}, 2), Error);
  }

  TEST_CASE("strata partition the population and order by risk") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 0.2);
    for (std::size_t n : {101u, 1000u, 1003u}) {
      std::vector<SubjectId> ids;
      std::vector<double> p;
      for (std::size_t i = 0; i < n; ++i) {
        ids.push_back(static_cast<SubjectId>(i + 1));
        p.push_back(u(rng));
      }
      const auto s = assign_risk_strata(ids, p, 4);
      std::set<SubjectId> seen;
      std::vector<std::size_t> size(4, 0);
      std::vector<double> mean(4, 0.0);
      for (int k = 1; k <= 4; ++k)
        for (auto id : s.members(k)) {
          CHECK(seen.insert(id).second);
          ++size[static_cast<std::size_t>(k - 1)];
          mean[static_cast<std::size_t>(k - 1)] += p[static_cast<std::size_t>(id - 1)];
        }
      CHECK(seen.size() == n);
      CHECK(*std::max_element(size.begin(), size.end()) - *std::min_element(size.begin(), size.end()) <= 1);
      for (int k = 1; k < 4; ++k)
        CHECK(mean[static_cast<std::size_t>(k)] / static_cast<double>(size[static_cast<std::size_t>(k)]) >
              mean[static_cast<std::size_t>(k - 1)] / static_cast<double>(size[static_cast<std::size_t>(k - 1)]));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; j += 37)
          if (p[i] > p[j]) CHECK(s.assignment[i] >= s.assignment[j]);
    }
  }

  TEST_CASE("ties at a boundary go to the lower stratum") {
    const std::vector<SubjectId> ids{1, 2, 3, 4, 5, 6};
    const std::vector<double> p{0.1, 0.2, 0.2, 0.2, 0.3, 0.4};
    const auto s = assign_risk_strata(ids, p, 2);
    CHECK(s.boundaries == std::vector<double>{0.2});
    CHECK(s.assignment == std::vector<int>{1, 1, 1, 1, 2, 2});
  }

  TEST_CASE("no covariate signal gives a c-statistic near one half") {
    const auto spec = outcome_scenario({}, 17);
    const auto sim = simulate(spec);
    StudySettings settings;
    settings.seed = 1;
    const auto dev = develop_risk_model(sim.covariates, sim.cohort, 1, settings);
    const auto perf = evaluate_risk_model(dev.model, sim.covariates, sim.cohort, 1, dev.development, settings);
    REQUIRE(perf.size() == 4);
    const auto& entire = perf[3];
    CHECK(entire.population == "Entire population");
    REQUIRE(entire.valid);
    CHECK(std::abs(entire.c.value - 0.5) <= 0.03);
  }

  TEST_CASE("a strong signal ranks subjects like the true risk") {
    const auto spec = outcome_scenario({{2, 1.4}, {5, 1.0}, {7, 0.8}}, 18);
    const auto sim = simulate(spec);
    StudySettings settings;
    settings.seed = 2;
    const auto dev = develop_risk_model(sim.covariates, sim.cohort, 1, settings);
    const auto pred = predicted_for(dev.model, sim.covariates, dev.eligible);
    std::vector<double> truth;
    for (auto id : dev.eligible) truth.push_back(sim.truth.find(id, 1)->true_risk);
    const double rho = oracle::spearman(pred, truth);
    MESSAGE("spearman = ", rho);
    CHECK(rho > 0.8);

    const auto strata = assign_risk_strata(dev.eligible, pred, 4);
    std::vector<double> mean(4, 0.0), count(4, 0.0);
    for (std::size_t i = 0; i < dev.eligible.size(); ++i) {
      mean[static_cast<std::size_t>(strata.assignment[i] - 1)] += truth[i];
      count[static_cast<std::size_t>(strata.assignment[i] - 1)] += 1.0;
    }
    const auto perf = evaluate_risk_model(dev.model, sim.covariates, sim.cohort, 1, dev.development, settings);
    REQUIRE(perf[3].valid);
    CHECK(perf[3].c.value > 0.6);
    for (std::size_t k = 1; k < 4; ++k) CHECK(mean[k] / count[k] > mean[k - 1] / count[k - 1]);
  }

  TEST_CASE("development rows exclude prior-outcome subjects and are matched") {
    const auto spec = outcome_scenario({{2, 1.0}}, 19);
    const auto sim = simulate(spec);
    StudySettings settings;
    const auto dev = develop_risk_model(sim.covariates, sim.cohort, 1, settings);
    std::size_t priors = 0;
    for (auto id : sim.covariates.subject_ids()) priors += sim.cohort.at(id).prior_outcome.count(1);
    CHECK(priors > 0);
    CHECK(dev.eligible.size() + priors == sim.covariates.subject_ids().size());
    std::size_t treated = 0;
    for (auto id : dev.development) {
      CHECK(sim.cohort.at(id).prior_outcome.count(1) == 0);
      treated += static_cast<std::size_t>(sim.cohort.at(id).treatment);
    }
    CHECK(2 * treated == dev.development.size());
    const auto labels = outcome_labels(sim.cohort, dev.development, 1, settings.time_at_risk_days);
    double events = 0;
    for (double y : labels) events += y;
    CHECK(static_cast<std::size_t>(events) == dev.n_events);
  }

  TEST_CASE("too few events is an error") {
    auto spec = outcome_scenario({}, 20);
    spec.n_subjects = 600;
    spec.outcomes[0].baseline_log_hazard = -11.0;
    const auto sim = simulate(spec);
    StudySettings settings;
    try {
      develop_risk_model(sim.covariates, sim.cohort, 1, settings);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::insufficient_data);
      CHECK(std::string(e.what()).rfind("insufficient events", 0) == 0);
    }
  }

  TEST_CASE("performance rows and determinism") {
    const auto spec = outcome_scenario({{2, 1.0}, {3, 0.6}}, 21);
    const auto sim = simulate(spec);
    StudySettings settings;
    const auto dev = develop_risk_model(sim.covariates, sim.cohort, 1, settings);
    const auto a = evaluate_risk_model(dev.model, sim.covariates, sim.cohort, 1, dev.development, settings);
    const auto b = evaluate_risk_model(dev.model, sim.covariates, sim.cohort, 1, dev.development, settings);
    REQUIRE(a.size() == 4);
    const std::vector<std::string> labels{"Matched", "Treatment", "Comparator", "Entire population"};
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(a[i].population == labels[i]);
      CHECK(to_json(a[i]) == to_json(b[i]));
      if (a[i].valid) {
        CHECK(a[i].c.lo <= a[i].c.value);
        CHECK(a[i].c.value <= a[i].c.hi);
      }
    }
    CHECK(a[0].n == dev.development.size());
    CHECK(a[1].n + a[2].n == a[3].n);
  }

  TEST_CASE("a population duplicated keeps its c-statistic and calibration") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> p, y;
    for (int i = 0; i < 500; ++i) {
      p.push_back(u(rng) * 0.3);
      y.push_back(u(rng) < p.back() ? 1.0 : 0.0);
    }
    const auto one = summarize_performance("Matched", p, y);
    auto p2 = p, y2 = y;
    p2.insert(p2.end(), p.begin(), p.end());
    y2.insert(y2.end(), y.begin(), y.end());
    const auto two = summarize_performance("Matched", p2, y2);
    CHECK(one.c.value == doctest::Approx(two.c.value).epsilon(1e-12));
    REQUIRE(one.calibration.has_value());
    REQUIRE(two.calibration.has_value());
    CHECK(one.calibration->slope == doctest::Approx(two.calibration->slope).epsilon(1e-6));
    CHECK(one.calibration->intercept == doctest::Approx(two.calibration->intercept).epsilon(1e-6));
  }

  TEST_CASE("an arm-specific outcome model shows up as differential fit") {
    auto spec = outcome_scenario({{2, 1.5}, {5, 1.2}}, 22);
    spec.n_subjects = 12000;
    spec.outcomes[0].treated_log_hazard = {{2, -1.5}, {5, -1.2}};
    const auto sim = simulate(spec);
    StudySettings settings;
    const auto dev = develop_risk_model(sim.covariates, sim.cohort, 1, settings);
    const auto perf = evaluate_risk_model(dev.model, sim.covariates, sim.cohort, 1, dev.development, settings);
    REQUIRE(perf[1].valid);
    REQUIRE(perf[2].valid);
    MESSAGE("c treated ", perf[1].c.value, ", c comparator ", perf[2].c.value);
    CHECK(std::abs(perf[1].c.value - perf[2].c.value) > 0.05);
  }

  TEST_CASE("model files round trip") {
    SparseLinearModel m;
    m.intercept = -3.25;
    m.coefficients = {{2, 0.5}, {9, -1.0 / 3.0}};
    m.lambda = 0.0125;
    const auto dir = fixture::temp_dir("model_io");
    save_model(m, dir / "m.json");
    const auto back = load_model(dir / "m.json");
    CHECK(back.intercept == m.intercept);
    CHECK(back.coefficients == m.coefficients);
    CHECK(back.lambda == m.lambda);
    CHECK_THROWS_AS(load_model(dir / "missing.json"), Error);
  }
}
