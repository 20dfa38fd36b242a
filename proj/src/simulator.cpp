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

#include "riskstrat/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "riskstrat/error.hpp"
#include "riskstrat/lasso.hpp"
#include "riskstrat/rng.hpp"
#include "riskstrat/text_io.hpp"

namespace riskstrat {

namespace {

enum Purpose : std::uint64_t {
  kCovariates = 1,
  kTreatment = 2,
  kCensoring = 3,
  kEvent = 4,
  kPrior = 5,
  kControlBaseline = 6,
};

double linear_term(const std::map<int, double>& coef, std::span<const char> row) {
  double s = 0.0;
  for (const auto& [j, b] : coef)
    if (row[static_cast<std::size_t>(j - 1)]) s += b;
  return s;
}

// Quartile cut points of `values` (linear interpolation between order statistics).
std::vector<double> quartile_cuts(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::vector<double> cuts;
  const double n1 = static_cast<double>(values.size() - 1);
  for (int q = 1; q < 4; ++q) {
    const double pos = n1 * q / 4.0;
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    cuts.push_back(values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]));
  }
  return cuts;
}

// Ties at a cut go to the lower quartile.
int quartile_of(double v, const std::vector<double>& cuts) {
  int q = 0;
  for (double c : cuts)
    if (v > c) ++q;
  return q;
}

std::map<int, double> coef_map(const nlohmann::json& j, const char* key) {
  std::map<int, double> out;
  if (!j.contains(key)) return out;
  for (const auto& [k, v] : j.at(key).items()) out[std::stoi(k)] = v.get<double>();
  return out;
}

nlohmann::json coef_json(const std::map<int, double>& m) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : m) j[std::to_string(k)] = v;
  return j;
}

OutcomeModelSpec outcome_from_json(const nlohmann::json& j) {
  OutcomeModelSpec o;
  o.id = j.value("outcome_id", OutcomeId{1});
  o.baseline_log_hazard = j.value("baseline_log_hazard", o.baseline_log_hazard);
  o.covariate_log_hazard = coef_map(j, "covariate_log_hazard");
  if (j.contains("true_log_hr")) {
    const auto& t = j.at("true_log_hr");
    o.true_log_hr = t.is_array() ? t.get<std::vector<double>>() : std::vector<double>{t.get<double>()};
  }
  o.treated_log_hazard = coef_map(j, "treated_log_hazard");
  o.prior_rate = j.value("prior_rate", 0.0);
  o.negative_control = j.value("negative_control", false);
  return o;
}

nlohmann::json outcome_to_json(const OutcomeModelSpec& o) {
  return {{"outcome_id", o.id},
          {"baseline_log_hazard", o.baseline_log_hazard},
          {"covariate_log_hazard", coef_json(o.covariate_log_hazard)},
          {"true_log_hr", o.true_log_hr},
          {"treated_log_hazard", coef_json(o.treated_log_hazard)},
          {"prior_rate", o.prior_rate},
          {"negative_control", o.negative_control}};
}

}  // namespace

double SimulationSpec::prevalence(int covariate) const {
  return covariate_prevalences.size() == 1
             ? covariate_prevalences[0]
             : covariate_prevalences[static_cast<std::size_t>(covariate - 1)];
}

std::vector<OutcomeModelSpec> SimulationSpec::all_outcomes() const {
  std::vector<OutcomeModelSpec> out = outcomes;
  for (int k = 0; k < negative_control_count; ++k) {
    OutcomeModelSpec nc = negative_control_model;
    nc.id = negative_control_first_id + k;
    nc.true_log_hr = {0.0};
    nc.treated_log_hazard.clear();
    nc.negative_control = true;
    if (negative_control_baseline_spread > 0.0) {
      KeyedStream rng(seed, static_cast<std::uint64_t>(nc.id), kControlBaseline);
      nc.baseline_log_hazard += negative_control_baseline_spread * (2.0 * rng.uniform() - 1.0);
    }
    out.push_back(std::move(nc));
  }
  return out;
}

std::vector<OutcomeId> SimulationSpec::negative_control_ids() const {
  std::vector<OutcomeId> ids;
  for (const auto& o : all_outcomes())
    if (o.negative_control) ids.push_back(o.id);
  return ids;
}

void SimulationSpec::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::invalid_input, "simulation spec: " + m); };
  if (n_subjects < 1) fail("n_subjects must be >= 1");
  if (n_binary_covariates < 0) fail("n_binary_covariates must be >= 0");
  if (n_hidden_covariates < 0 || n_hidden_covariates > n_binary_covariates)
    fail("n_hidden_covariates must lie in [0, n_binary_covariates]");
  if (covariate_prevalences.size() != 1 &&
      covariate_prevalences.size() != static_cast<std::size_t>(n_binary_covariates))
    fail("covariate_prevalences needs one value or one per covariate");
  for (double p : covariate_prevalences)
    if (!(p > 0.0 && p < 1.0)) fail("prevalences must lie strictly inside (0, 1)");
  auto check_index = [&](const std::map<int, double>& m, const std::string& what) {
    for (const auto& [j, b] : m) {
      if (j < 1 || j > n_binary_covariates) fail(what + ": covariate index out of range");
      if (!std::isfinite(b)) fail(what + ": non-finite coefficient");
    }
  };
  check_index(treatment_coefficients, "treatment_coefficients");
  if (!std::isfinite(treatment_intercept)) fail("treatment_intercept must be finite");
  const auto all = all_outcomes();
  if (all.empty()) fail("at least one outcome model is required");
  std::set<OutcomeId> ids;
  for (const auto& o : all) {
    if (!ids.insert(o.id).second) fail("duplicate outcome id " + std::to_string(o.id));
    check_index(o.covariate_log_hazard, "covariate_log_hazard");
    check_index(o.treated_log_hazard, "treated_log_hazard");
    if (o.true_log_hr.size() != 1 && o.true_log_hr.size() != 4)
      fail("true_log_hr needs 1 or 4 values");
    if (!std::isfinite(o.baseline_log_hazard) || std::exp(o.baseline_log_hazard) == 0.0)
      throw Error(ErrorCode::degenerate, "simulation spec: outcome " + std::to_string(o.id) +
                                             " has an all-zero hazard");
    if (o.negative_control &&
        (std::any_of(o.true_log_hr.begin(), o.true_log_hr.end(), [](double v) { return v != 0.0; }) ||
         !o.treated_log_hazard.empty()))
      fail("negative-control outcome " + std::to_string(o.id) + " must have a true log HR of 0");
    if (!(o.prior_rate >= 0.0 && o.prior_rate < 1.0)) fail("prior_rate must lie in [0, 1)");
  }
  if (!(censoring_rate >= 0.0)) fail("censoring_rate must be >= 0");
  if (admin_censor_day < 1) fail("admin_censor_day must be >= 1");
  if (time_at_risk_days < 1) fail("time_at_risk_days must be >= 1");
}

SimulationSpec simulation_spec_from_json(const nlohmann::json& j) {
  SimulationSpec s;
  try {
    s.n_subjects = j.value("n_subjects", s.n_subjects);
    s.n_binary_covariates = j.value("n_binary_covariates", s.n_binary_covariates);
    s.n_hidden_covariates = j.value("n_hidden_covariates", s.n_hidden_covariates);
    if (j.contains("covariate_prevalences")) {
      const auto& p = j.at("covariate_prevalences");
      s.covariate_prevalences = p.is_array() ? p.get<std::vector<double>>() : std::vector<double>{p.get<double>()};
    }
    if (j.contains("treatment_model")) {
      const auto& t = j.at("treatment_model");
      s.treatment_intercept = t.value("intercept", 0.0);
      s.treatment_coefficients = coef_map(t, "coefficients");
    }
    if (j.contains("outcome_models"))
      for (const auto& o : j.at("outcome_models")) s.outcomes.push_back(outcome_from_json(o));
    s.negative_control_count = j.value("negative_control_count", 0);
    s.negative_control_first_id = j.value("negative_control_first_id", s.negative_control_first_id);
    if (j.contains("negative_control_model"))
      s.negative_control_model = outcome_from_json(j.at("negative_control_model"));
    s.negative_control_baseline_spread = j.value("negative_control_baseline_spread", 0.0);
    s.censoring_rate = j.value("censoring_rate", 0.0);
    s.admin_censor_day = j.value("admin_censor_day", s.admin_censor_day);
    s.time_at_risk_days = j.value("time_at_risk_days", s.time_at_risk_days);
    s.seed = j.value("seed", s.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_input, std::string("simulation spec: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw Error(ErrorCode::invalid_input, "simulation spec: covariate keys must be integers");
  }
  s.validate();
  return s;
}

nlohmann::json to_json(const SimulationSpec& s) {
  nlohmann::json outcomes = nlohmann::json::array();
  for (const auto& o : s.outcomes) outcomes.push_back(outcome_to_json(o));
  return {{"n_subjects", s.n_subjects},
          {"n_binary_covariates", s.n_binary_covariates},
          {"n_hidden_covariates", s.n_hidden_covariates},
          {"covariate_prevalences", s.covariate_prevalences},
          {"treatment_model",
           {{"intercept", s.treatment_intercept}, {"coefficients", coef_json(s.treatment_coefficients)}}},
          {"outcome_models", outcomes},
          {"negative_control_count", s.negative_control_count},
          {"negative_control_first_id", s.negative_control_first_id},
          {"negative_control_model", outcome_to_json(s.negative_control_model)},
          {"negative_control_baseline_spread", s.negative_control_baseline_spread},
          {"censoring_rate", s.censoring_rate},
          {"admin_censor_day", s.admin_censor_day},
          {"time_at_risk_days", s.time_at_risk_days},
          {"seed", s.seed}};
}

double true_risk(const OutcomeModelSpec& model, int time_at_risk_days, std::span<const char> row) {
  const double hazard = std::exp(model.baseline_log_hazard + linear_term(model.covariate_log_hazard, row));
  return -std::expm1(-static_cast<double>(time_at_risk_days) * hazard);
}

double true_risk(const SimulationSpec& spec, OutcomeId outcome, std::span<const char> row) {
  for (const auto& o : spec.all_outcomes())
    if (o.id == outcome) return true_risk(o, spec.time_at_risk_days, row);
  throw Error(ErrorCode::invalid_input, "true_risk: unknown outcome " + std::to_string(outcome));
}

const TruthRow* TruthRecord::find(SubjectId subject, OutcomeId outcome) const {
  auto it = std::lower_bound(rows.begin(), rows.end(), std::make_pair(subject, outcome),
                             [](const TruthRow& r, const std::pair<SubjectId, OutcomeId>& key) {
                               return std::make_pair(r.subject, r.outcome) < key;
                             });
  if (it == rows.end() || it->subject != subject || it->outcome != outcome) return nullptr;
  return &*it;
}

Simulation simulate(const SimulationSpec& spec) {
  spec.validate();
  const auto n = static_cast<std::size_t>(spec.n_subjects);
  const auto p = static_cast<std::size_t>(spec.n_binary_covariates);
  const auto observed = p - static_cast<std::size_t>(spec.n_hidden_covariates);
  const auto outcomes = spec.all_outcomes();

  std::vector<std::vector<char>> x(n, std::vector<char>(p, 0));
  std::vector<int> treatment(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto subject = static_cast<std::uint64_t>(i + 1);
    KeyedStream cov_rng(spec.seed, subject, kCovariates);
    for (std::size_t j = 0; j < p; ++j)
      x[i][j] = cov_rng.bernoulli(spec.prevalence(static_cast<int>(j + 1))) ? 1 : 0;
    KeyedStream trt_rng(spec.seed, subject, kTreatment);
    const double ps = logistic(spec.treatment_intercept + linear_term(spec.treatment_coefficients, x[i]));
    treatment[i] = trt_rng.bernoulli(ps) ? 1 : 0;
  }

  std::vector<CovariateEntry> entries;
  std::map<CovariateId, CovariateMeta> meta;
  for (std::size_t j = 0; j < observed; ++j)
    meta.emplace(static_cast<CovariateId>(j + 1),
                 CovariateMeta{"covariate_" + std::to_string(j + 1), CovariateKind::binary});
  std::vector<SubjectId> subjects(n);
  std::vector<CohortRow> rows(n);
  std::vector<double> end_time(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = static_cast<SubjectId>(i + 1);
    subjects[i] = id;
    for (std::size_t j = 0; j < observed; ++j)
      if (x[i][j]) entries.push_back({id, static_cast<CovariateId>(j + 1), 1.0});
    KeyedStream cens_rng(spec.seed, static_cast<std::uint64_t>(id), kCensoring);
    const double c = cens_rng.exponential(spec.censoring_rate);
    const double admin = static_cast<double>(spec.admin_censor_day);
    end_time[i] = std::min(c, admin);
    rows[i].subject = id;
    rows[i].treatment = treatment[i];
    rows[i].followup_days = c < admin ? static_cast<int>(std::ceil(c)) : spec.admin_censor_day;
    rows[i].followup_days = std::min(rows[i].followup_days, spec.admin_censor_day);
  }

  Simulation sim;
  sim.truth.rows.reserve(n * outcomes.size());
  std::vector<std::vector<TruthRow>> truth_by_subject(n);
  for (const auto& o : outcomes) {
    std::vector<double> risk(n);
    for (std::size_t i = 0; i < n; ++i) risk[i] = true_risk(o, spec.time_at_risk_days, x[i]);
    const auto cuts = quartile_cuts(risk);
    for (std::size_t i = 0; i < n; ++i) {
      const auto subject = static_cast<std::uint64_t>(i + 1);
      const int q = quartile_of(risk[i], cuts);
      double log_hr = o.true_log_hr.size() == 1 ? o.true_log_hr[0] : o.true_log_hr[static_cast<std::size_t>(q)];
      log_hr += linear_term(o.treated_log_hazard, x[i]);
      const double log_hazard = o.baseline_log_hazard + linear_term(o.covariate_log_hazard, x[i]) +
                                (treatment[i] ? log_hr : 0.0);
      KeyedStream ev_rng(spec.seed, subject, derive_key({kEvent, static_cast<std::uint64_t>(o.id)}));
      const double t = ev_rng.exponential(std::exp(log_hazard));
      if (t <= end_time[i]) {
        const int day = std::max(1, static_cast<int>(std::ceil(t)));
        rows[i].outcomes[o.id] = std::min(day, rows[i].followup_days);
      }
      if (o.prior_rate > 0.0) {
        KeyedStream prior_rng(spec.seed, subject, derive_key({kPrior, static_cast<std::uint64_t>(o.id)}));
        if (prior_rng.bernoulli(o.prior_rate)) rows[i].prior_outcome.insert(o.id);
      }
      truth_by_subject[i].push_back({static_cast<SubjectId>(subject), o.id, risk[i], log_hr});
    }
  }
  for (auto& v : truth_by_subject) {
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.outcome < b.outcome; });
    sim.truth.rows.insert(sim.truth.rows.end(), v.begin(), v.end());
  }
  for (std::size_t i = 0; i < n; ++i) sim.truth.latent_covariates.emplace(subjects[i], std::move(x[i]));

  sim.covariates = CovariateTable(std::move(subjects), std::move(entries), std::move(meta));
  sim.cohort = CohortTable(std::move(rows));
  return sim;
}

void write_truth(const TruthRecord& truth, const std::filesystem::path& path) {
  text::CsvWriter out(path, "subject_id,true_risk,outcome_id,true_log_hr");
  for (const auto& r : truth.rows) out.row(r.subject, r.true_risk, r.outcome, r.true_log_hr);
}

}  // namespace riskstrat
