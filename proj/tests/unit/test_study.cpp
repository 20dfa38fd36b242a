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
#include <map>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "riskstrat/simulator.hpp"
#include "riskstrat/stats.hpp"
#include "riskstrat/study.hpp"
#include "riskstrat/text_io.hpp"

using namespace riskstrat;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Row = std::map<std::string, std::string>;

std::vector<Row> read_csv(const fs::path& p) {
  const auto lines = text::read_lines(p);
  REQUIRE_FALSE(lines.empty());
  const auto header = text::split_csv(lines[0]);
  std::vector<Row> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cells = text::split_csv(lines[i]);
    REQUIRE(cells.size() == header.size());
    Row r;
    for (std::size_t j = 0; j < header.size(); ++j) r[header[j]] = cells[j];
    rows.push_back(std::move(r));
  }
  return rows;
}

// Small confounded bundle with one outcome and ten null controls.
fs::path make_bundle(const std::string& name) {
  SimulationSpec spec;
  spec.n_subjects = 5000;
  spec.n_binary_covariates = 12;
  spec.covariate_prevalences = {0.3};
  spec.treatment_intercept = -0.2;
  spec.treatment_coefficients = {{1, 0.4}, {2, -0.3}, {3, 0.3}};
  OutcomeModelSpec o;
  o.baseline_log_hazard = -7.4;
  o.covariate_log_hazard = {{1, 0.6}, {4, 0.9}, {5, 0.5}};
  o.true_log_hr = {std::log(0.8)};
  o.prior_rate = 0.02;
  spec.outcomes = {o};
  OutcomeModelSpec nc;
  nc.baseline_log_hazard = -7.0;
  nc.covariate_log_hazard = {{1, 0.3}};
  spec.negative_control_count = 10;
  spec.negative_control_model = nc;
  spec.seed = 77;
  const auto sim = simulate(spec);
  const auto dir = fixture::temp_dir(name);
  write_bundle(sim.covariates, sim.cohort, dir / "data");
  return dir;
}

json base_config() {
  json settings = {{"risk_strata_count", 4}, {"ps_strata_count", 5}, {"seed", 5}, {"outcome_ids", {1}},
                   {"negative_control_ids", {1001, 1002, 1003, 1004, 1005, 1006, 1007, 1008, 1009, 1010}}};
  return {{"covariates", "data/covariates.csv"},
          {"cohort", "data/cohort.csv"},
          {"outcomes", "data/outcomes.csv"},
          {"output_dir", "out"},
          {"settings", settings},
          {"report", {{"emit_km_curves", false}, {"bootstrap_reps", 40}}}};
}

}  // namespace

TEST_SUITE("study-runner") {
  TEST_CASE("configuration errors are all collected") {
    const auto dir = fixture::temp_dir("config_errors");
    json j = base_config();
    j["settings"]["risk_strata_count"] = 1;
    j["settings"]["negative_control_ids"] = {1, 1001};
    j["settings"]["estimand"] = "ATX";
    j["colour"] = "blue";
    const auto check = parse_config(j, dir);
    CHECK_FALSE(check.config.has_value());
    auto has = [&](const std::string& needle) {
      for (const auto& e : check.errors)
        if (e.find(needle) != std::string::npos) return true;
      return false;
    };
    CHECK(has("risk_strata_count must be >= 2"));
    CHECK(has("overlap"));
    CHECK(has("ATX"));
    CHECK(has("colour"));
    CHECK(has("covariates.csv"));  // missing file
    CHECK(check.errors.size() >= 5);
  }

  TEST_CASE("missing or unreadable config files are reported") {
    const auto dir = fixture::temp_dir("config_io");
    CHECK_FALSE(validate_config(dir / "absent.json").errors.empty());
    fixture::write_file(dir / "bad.json", "{ not json");
    CHECK_FALSE(validate_config(dir / "bad.json").errors.empty());
  }

  TEST_CASE("the shipped example config parses clean") {
    const auto check = validate_config(fs::path(RISKSTRAT_SOURCE_DIR) / "config" / "study.json");
    for (const auto& e : check.errors) MESSAGE(e);
    CHECK(check.errors.empty());
    REQUIRE(check.config.has_value());
    CHECK(check.config->settings.outcome_ids == std::vector<OutcomeId>{1});
  }

  TEST_CASE("end-to-end run writes a consistent bundle") {
    const auto dir = make_bundle("study_run");
    auto check = parse_config(base_config(), dir);
    REQUIRE(check.errors.empty());
    auto config = *check.config;
    config.threads = 1;
    const auto summary = run_study(config);
    const auto out = dir / "out";
    CHECK(summary.strata == 5);
    CHECK(summary.exit_code() == (summary.all_pass() ? 0 : 2));

    const auto est = read_csv(out / "estimates.csv");
    const auto ver = read_csv(out / "verdicts.csv");
    std::vector<std::string> strata;
    for (const auto& r : est) {
      CHECK(r.at("outcome_id") == "1");
      strata.push_back(r.at("risk_stratum"));
    }
    CHECK(strata == std::vector<std::string>{"1", "2", "3", "4", "overall"});

    std::map<std::string, Row> verdict_of;
    for (const auto& r : ver) verdict_of[r.at("outcome_id") + "/" + r.at("risk_stratum")] = r;
    std::size_t passed = 0;
    for (const auto& r : est) {
      const auto it = verdict_of.find(r.at("outcome_id") + "/" + r.at("risk_stratum"));
      REQUIRE(it != verdict_of.end());
      CHECK(it->second.at("diagnostics_pass") == r.at("diagnostics_pass"));
      passed += r.at("diagnostics_pass") == "true";

      const double n = std::stod(r.at("n_t")) + std::stod(r.at("n_c"));
      CHECK(std::stod(r.at("events_t")) <= std::stod(r.at("n_t")));
      CHECK(std::stod(r.at("events_c")) <= std::stod(r.at("n_c")));
      CHECK(std::stod(r.at("py_t")) + std::stod(r.at("py_c")) <= n * 730.0 / 365.25 + 1e-9);
      if (r.at("hr") != "NA") {
        CHECK(std::stod(r.at("hr_lo")) <= std::stod(r.at("hr")));
        CHECK(std::stod(r.at("hr")) <= std::stod(r.at("hr_hi")));
      }
    }
    CHECK(passed == summary.passed);

    // Every subject is in exactly one quarter or in the exclusions ledger.
    const auto [cov, cohort] = load_bundle(dir / "data");
    std::map<std::string, int> seen;
    for (const auto& r : read_csv(out / "risk.csv")) {
      CHECK(r.at("risk_stratum") != "NA");
      ++seen[r.at("subject_id")];
    }
    for (const auto& r : read_csv(out / "exclusions.csv")) {
      CHECK(r.at("reason") == "prior_outcome");
      ++seen[r.at("subject_id")];
    }
    CHECK(seen.size() == cov.subject_ids().size());
    for (const auto& [id, count] : seen) CHECK(count == 1);

    const auto report = json::parse(fixture::read_file(out / "report.json"));
    CHECK(report.contains("version"));
    CHECK(report["seed"] == 5);
    REQUIRE(report["outcomes"].size() == 1);
    CHECK(report["outcomes"][0]["performance"].size() == 4);
    CHECK(report["outcomes"][0]["strata"].size() == 4);
    CHECK(report["summary"]["strata"] == 5);

    SUBCASE("parallel rerun is byte-identical") {
      auto par = config;
      par.threads = 4;
      par.output_dir = dir / "out_parallel";
      run_study(par);
      for (const char* f : {"report.json", "estimates.csv", "verdicts.csv", "balance.csv", "ps.csv", "risk.csv",
                            "ncs.csv"})
        CHECK_MESSAGE(fixture::read_file(out / f) == fixture::read_file(par.output_dir / f), f);
    }

    SUBCASE("plot data projects the bundle") {
      const auto plots = dir / "plots";
      emit_plot_data(out, plots);
      CHECK(fixture::read_file(plots / "balance_scatter.csv") == fixture::read_file(out / "balance.csv"));
      const auto boundary = read_csv(plots / "nc_boundary.csv");
      bool zero_seen = false;
      for (const auto& r : boundary) {
        const double x = std::stod(r.at("log_hr"));
        CHECK(std::stod(r.at("se")) == doctest::Approx(std::abs(x) / kZ975).epsilon(1e-9));
        if (x == 0.0) {
          zero_seen = true;
          CHECK(std::stod(r.at("se")) == 0.0);
        }
      }
      CHECK(zero_seen);
      const auto forest = read_csv(plots / "forest.csv");
      REQUIRE(forest.size() == est.size());
      for (std::size_t i = 0; i < est.size(); ++i)
        for (const char* k : {"outcome_id", "risk_stratum", "hr", "hr_lo", "hr_hi", "ard", "ard_lo", "ard_hi",
                              "diagnostics_pass"})
          CHECK(forest[i].at(k) == est[i].at(k));
      CHECK(fs::exists(plots / "preference_density.csv"));
      CHECK(fs::exists(plots / "nc_scatter.csv"));
    }
  }

  TEST_CASE("a fatal failure names the step and outcome") {
    const auto dir = make_bundle("study_fatal");
    json j = base_config();
    j["settings"]["min_events"] = 1000000;
    auto check = parse_config(j, dir);
    REQUIRE(check.errors.empty());
    try {
      run_study(*check.config);
      FAIL("expected a study error");
    } catch (const StudyError& e) {
      CHECK(e.step() == "risk model development");
      CHECK(e.outcome() == std::optional<OutcomeId>(1));
      CHECK(std::string(e.what()).find("insufficient events") != std::string::npos);
      CHECK(e.code() == ErrorCode::insufficient_data);
    }
  }
}
