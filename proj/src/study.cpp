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

#include "riskstrat/study.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "riskstrat/calibration.hpp"
#include "riskstrat/cohort_data.hpp"
#include "riskstrat/parallel.hpp"
#include "riskstrat/risk_stratifier.hpp"
#include "riskstrat/stats.hpp"
#include "riskstrat/stratum_estimation.hpp"
#include "riskstrat/text_io.hpp"

namespace riskstrat {

namespace fs = std::filesystem;
using nlohmann::json;
using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------- config

namespace {

class Reader {
 public:
  Reader(const json& obj, std::string prefix, std::vector<std::string>& errors)
      : obj_(obj), prefix_(std::move(prefix)), errors_(errors) {}

  bool has(const char* key) const { return obj_.contains(key); }

  void check_keys(std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : obj_.items())
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
        errors_.push_back(prefix_ + key + ": unknown key");
  }

  template <class Int>
  void integer(const char* key, Int& out) {
    if (!has(key)) return;
    const auto& v = obj_.at(key);
    if (!v.is_number_integer()) return bad(key, "must be an integer");
    if constexpr (std::is_unsigned_v<Int>) {
      if (v.is_number_unsigned()) out = v.get<Int>();
      else if (v.get<std::int64_t>() >= 0) out = static_cast<Int>(v.get<std::int64_t>());
      else bad(key, "must be >= 0");
    } else {
      out = v.get<Int>();
    }
  }

  void real(const char* key, double& out) {
    if (!has(key)) return;
    const auto& v = obj_.at(key);
    if (!v.is_number()) return bad(key, "must be a number");
    out = v.get<double>();
  }

  void boolean(const char* key, bool& out) {
    if (!has(key)) return;
    const auto& v = obj_.at(key);
    if (!v.is_boolean()) return bad(key, "must be true or false");
    out = v.get<bool>();
  }

  void string(const char* key, std::string& out) {
    if (!has(key)) return;
    const auto& v = obj_.at(key);
    if (!v.is_string()) return bad(key, "must be a string");
    out = v.get<std::string>();
  }

  template <class T>
  void list(const char* key, std::vector<T>& out) {
    if (!has(key)) return;
    const auto& v = obj_.at(key);
    if (!v.is_array()) return bad(key, "must be an array");
    std::vector<T> tmp;
    for (const auto& e : v) {
      if constexpr (std::is_integral_v<T>) {
        if (!e.is_number_integer()) return bad(key, "must contain only integers");
      } else {
        if (!e.is_number()) return bad(key, "must contain only numbers");
      }
      tmp.push_back(e.get<T>());
    }
    out = std::move(tmp);
  }

  void bad(const char* key, const std::string& msg) { errors_.push_back(prefix_ + key + ": " + msg); }

 private:
  const json& obj_;
  std::string prefix_;
  std::vector<std::string>& errors_;
};

StudySettings parse_settings(const json& j, std::vector<std::string>& errors) {
  StudySettings s;
  if (!j.is_object()) {
    errors.push_back("settings: must be an object");
    return s;
  }
  Reader r(j, "settings.", errors);
  r.check_keys({"risk_strata_count", "ps_strata_count", "caliper", "cv_folds", "time_at_risk_days", "lambda_grid",
                "seed", "estimand", "outcome_ids", "negative_control_ids", "min_events", "drop_early_censored", "ties",
                "max_smd", "equipoise_threshold", "nc_alpha", "nc_max_significant_fraction"});
  r.integer("risk_strata_count", s.risk_strata_count);
  r.integer("ps_strata_count", s.ps_strata_count);
  r.real("caliper", s.caliper);
  r.integer("cv_folds", s.cv_folds);
  r.integer("time_at_risk_days", s.time_at_risk_days);
  r.list("lambda_grid", s.lambda_grid);
  r.integer("seed", s.seed);
  std::string estimand = to_string(s.estimand);
  r.string("estimand", estimand);
  if (estimand == "ATT" || estimand == "att") s.estimand = Estimand::att;
  else if (estimand == "ATE" || estimand == "ate") s.estimand = Estimand::ate;
  else r.bad("estimand", "must be \"ATT\" or \"ATE\", got \"" + estimand + "\"");
  r.list("outcome_ids", s.outcome_ids);
  r.list("negative_control_ids", s.negative_control_ids);
  r.integer("min_events", s.min_events);
  r.boolean("drop_early_censored", s.drop_early_censored);
  std::string ties = to_string(s.ties);
  r.string("ties", ties);
  if (ties == "efron") s.ties = TieMethod::efron;
  else if (ties == "breslow") s.ties = TieMethod::breslow;
  else r.bad("ties", "must be \"efron\" or \"breslow\", got \"" + ties + "\"");
  r.real("max_smd", s.max_smd);
  r.real("equipoise_threshold", s.equipoise_threshold);
  r.real("nc_alpha", s.nc_alpha);
  r.real("nc_max_significant_fraction", s.nc_max_significant_fraction);
  if (!j.contains("outcome_ids") || s.outcome_ids.empty()) errors.push_back("settings.outcome_ids: at least one outcome is required");
  for (auto& p : s.problems()) errors.push_back("settings: " + p);
  return s;
}

}  // namespace

ConfigCheck parse_config(const json& j, const fs::path& base) {
  ConfigCheck out;
  auto& errors = out.errors;
  if (!j.is_object()) {
    errors.push_back("config: top level must be an object");
    return out;
  }
  StudyConfig cfg;
  Reader r(j, "", errors);
  r.check_keys({"covariates", "cohort", "outcomes", "output_dir", "settings", "report", "threads", "external_models"});
  auto path_field = [&](const char* key, fs::path& out_path, bool must_exist) {
    if (!r.has(key)) {
      if (must_exist) errors.push_back(std::string(key) + ": required");
      return;
    }
    std::string raw;
    r.string(key, raw);
    if (raw.empty()) return;
    out_path = fs::path(raw).is_absolute() ? fs::path(raw) : base / raw;
    if (must_exist && !fs::is_regular_file(out_path))
      errors.push_back(std::string(key) + ": file not found: " + out_path.string());
  };
  path_field("covariates", cfg.covariates, true);
  path_field("cohort", cfg.cohort, true);
  path_field("outcomes", cfg.outcomes, true);
  path_field("output_dir", cfg.output_dir, false);
  r.integer("threads", cfg.threads);

  if (j.contains("settings")) cfg.settings = parse_settings(j.at("settings"), errors);
  else errors.push_back("settings: required");

  if (j.contains("report")) {
    const auto& rep = j.at("report");
    if (!rep.is_object()) {
      errors.push_back("report: must be an object");
    } else {
      Reader rr(rep, "report.", errors);
      rr.check_keys({"emit_km_curves", "bootstrap_reps"});
      rr.boolean("emit_km_curves", cfg.report.emit_km_curves);
      rr.integer("bootstrap_reps", cfg.report.bootstrap_reps);
      if (cfg.report.bootstrap_reps < 0) errors.push_back("report.bootstrap_reps: must be >= 0");
    }
  }

  if (j.contains("external_models")) {
    const auto& ext = j.at("external_models");
    if (!ext.is_object()) {
      errors.push_back("external_models: must map outcome ids to model paths");
    } else {
      for (const auto& [key, value] : ext.items()) {
        OutcomeId id = 0;
        if (!text::parse_int(key, id)) {
          errors.push_back("external_models." + key + ": key must be an outcome id");
          continue;
        }
        if (!value.is_string()) {
          errors.push_back("external_models." + key + ": must be a path");
          continue;
        }
        const fs::path p = fs::path(value.get<std::string>()).is_absolute() ? fs::path(value.get<std::string>())
                                                                              : base / value.get<std::string>();
        if (!fs::is_regular_file(p)) errors.push_back("external_models." + key + ": file not found: " + p.string());
        if (std::find(cfg.settings.outcome_ids.begin(), cfg.settings.outcome_ids.end(), id) ==
            cfg.settings.outcome_ids.end())
          errors.push_back("external_models." + key + ": not one of settings.outcome_ids");
        cfg.external_models[id] = p;
      }
    }
  }
  if (errors.empty()) out.config = std::move(cfg);
  return out;
}

ConfigCheck validate_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {std::nullopt, {"cannot open config " + path.string()}};
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    return {std::nullopt, {path.string() + ": invalid JSON: " + e.what()}};
  }
  return parse_config(j, path.parent_path());
}

json StudyConfig::echo() const {
  const auto& s = settings;
  json ext = json::object();
  for (const auto& [id, p] : external_models) ext[std::to_string(id)] = p.filename().string();
  return {
      {"data",
       {{"covariates", covariates.filename().string()},
        {"cohort", cohort.filename().string()},
        {"outcomes", outcomes.filename().string()}}},
      {"settings",
       {{"risk_strata_count", s.risk_strata_count},
        {"ps_strata_count", s.ps_strata_count},
        {"caliper", s.caliper},
        {"cv_folds", s.cv_folds},
        {"time_at_risk_days", s.time_at_risk_days},
        {"lambda_grid", s.lambda_grid},
        {"seed", s.seed},
        {"estimand", s.estimand == Estimand::att ? "ATT" : "ATE"},
        {"outcome_ids", s.outcome_ids},
        {"negative_control_ids", s.negative_control_ids},
        {"min_events", s.min_events},
        {"drop_early_censored", s.drop_early_censored},
        {"ties", to_string(s.ties)},
        {"max_smd", s.max_smd},
        {"equipoise_threshold", s.equipoise_threshold},
        {"nc_alpha", s.nc_alpha},
        {"nc_max_significant_fraction", s.nc_max_significant_fraction}}},
      {"report", {{"emit_km_curves", report.emit_km_curves}, {"bootstrap_reps", report.bootstrap_reps}}},
      {"external_models", ext},
  };
}

StudyError::StudyError(ErrorCode code, std::string step, std::optional<OutcomeId> outcome, std::string stratum,
                       const std::string& detail)
    : Error(code, "step '" + step + "'" + (outcome ? ", outcome " + std::to_string(*outcome) : std::string()) +
                      (stratum.empty() ? std::string() : ", risk stratum " + stratum) + ": " + detail),
      step_(std::move(step)),
      outcome_(outcome),
      stratum_(std::move(stratum)) {}

// ---------------------------------------------------------------- run

namespace {

struct OutcomeState {
  OutcomeId id = 0;
  std::string source;
  RiskModelDevelopment dev;
  std::vector<BalanceRow> dev_balance;
  RiskStrata strata;
};

std::string num(const std::optional<double>& v) { return v ? text::format_double(*v) : "NA"; }

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

double max_abs_smd_after(const std::vector<BalanceRow>& rows) {
  double m = 0.0;
  for (const auto& r : rows) m = std::max(m, std::abs(r.smd_after));
  return m;
}

ojson effect_json(const StratumAnalysis& a, const StudySettings& settings) {
  const auto& e = a.effect;
  ojson diag = {{"verdict", to_string(e.verdict.verdict)},
                {"pass", e.diagnostics_pass()},
                {"reasons", e.verdict.reasons},
                {"max_abs_smd_after", a.balance ? json(max_abs_smd_after(*a.balance)) : json(nullptr)},
                {"equipoise", opt(a.equipoise)}};
  const auto nc = summarize_controls(a.controls.estimates, settings.nc_alpha);
  diag["negative_controls"] = {{"used", nc.used}, {"significant", nc.significant}, {"skipped", a.controls.skipped.size()}};
  return ojson{{"risk_stratum", e.risk_stratum},
               {"n_t", e.n_t},
               {"n_c", e.n_c},
               {"py_t", e.py_t},
               {"py_c", e.py_c},
               {"events_t", e.events_t},
               {"events_c", e.events_c},
               {"log_hr", opt(e.log_hr)},
               {"se", opt(e.se)},
               {"hr", opt(e.hr)},
               {"hr_lo", opt(e.hr_lo)},
               {"hr_hi", opt(e.hr_hi)},
               {"ard", opt(e.ard)},
               {"ard_lo", opt(e.ard_lo)},
               {"ard_hi", opt(e.ard_hi)},
               {"ard_ci_method", e.ard_ci_method.empty() ? json(nullptr) : json(e.ard_ci_method)},
               {"diagnostics_pass", e.diagnostics_pass()},
               {"diagnostics", diag},
               {"empirical_null", a.null ? json(to_json(*a.null)) : json(nullptr)},
               {"errors", e.reasons},
               {"warnings", e.warnings}};
}

void write_json(const fs::path& path, const ojson& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

template <class F>
auto at_step(const std::string& step, std::optional<OutcomeId> outcome, const std::string& stratum, F&& f) {
  try {
    return f();
  } catch (const StudyError&) {
    throw;
  } catch (const Error& e) {
    throw StudyError(e.code(), step, outcome, stratum, e.what());
  }
}

}  // namespace

StudySummary run_study(const StudyConfig& config) {
  const auto& settings = config.settings;
  at_step("configuration", std::nullopt, "", [&] { settings.validate(); });
  auto [cov, cohort] = at_step("load", std::nullopt, "",
                               [&] { return load_bundle(config.covariates, config.cohort, config.outcomes); });

  const fs::path out_dir = config.output_dir;
  at_step("output", std::nullopt, "", [&] {
    std::error_code ec;
    fs::create_directories(out_dir / "empirical_null", ec);
    fs::create_directories(out_dir / "models", ec);
    if (ec || !fs::is_directory(out_dir / "models"))
      throw Error(ErrorCode::io, "cannot create output directory " + out_dir.string());
  });

  // Risk model, performance and risk strata per outcome.
  std::vector<OutcomeState> outcomes(settings.outcome_ids.size());
  parallel_for(outcomes.size(), config.threads, [&](std::size_t o) {
    auto& st = outcomes[o];
    st.id = settings.outcome_ids[o];
    std::optional<SparseLinearModel> external;
    if (auto it = config.external_models.find(st.id); it != config.external_models.end())
      external = at_step("load external model", st.id, "", [&] { return load_model(it->second); });
    st.source = external ? "external" : "developed";
    st.dev = at_step("risk model development", st.id, "", [&] {
      return develop_risk_model(cov, cohort, st.id, settings, external ? &*external : nullptr);
    });
    at_step("development balance", st.id, "", [&] {
      std::vector<bool> in_set(st.dev.eligible.size());
      for (std::size_t i = 0; i < in_set.size(); ++i) in_set[i] = st.dev.ps.match_partner[i].has_value();
      std::vector<int> trt(st.dev.ps.treatment);
      st.dev_balance = compute_balance(FeatureMatrix::from_table(cov, st.dev.eligible), trt, MatchedSet{in_set});
    });
    const auto perf = at_step("risk model evaluation", st.id, "", [&] {
      return evaluate_risk_model(st.dev.model, cov, cohort, st.id, st.dev.development, settings);
    });
    st.strata = at_step("risk stratification", st.id, "", [&] {
      const auto pred = predict_proba(st.dev.model, FeatureMatrix::from_table(cov, st.dev.eligible));
      return assign_risk_strata(st.dev.eligible, pred, settings.risk_strata_count);
    });
    st.strata.model = st.dev.model;
    st.strata.performance = perf;
  });

  // Per (outcome, risk stratum) estimation; stratum 0 is the overall analysis.
  const auto k = static_cast<std::size_t>(settings.risk_strata_count);
  std::vector<StratumAnalysis> analyses(outcomes.size() * (k + 1));
  const EstimationOptions options{config.report.bootstrap_reps, config.report.emit_km_curves};
  parallel_for(analyses.size(), config.threads, [&](std::size_t t) {
    const auto& st = outcomes[t / (k + 1)];
    const int stratum = static_cast<int>((t % (k + 1) + 1) % (k + 1));  // 1..k then 0
    const auto members = stratum == 0 ? st.dev.eligible : st.strata.members(stratum);
    analyses[t] = at_step("stratum estimation", st.id, stratum == 0 ? "overall" : std::to_string(stratum),
                          [&] { return estimate_stratum(cov, cohort, st.id, members, stratum, settings, options); });
  });

  // Outputs, in deterministic order.
  StudySummary summary;
  at_step("write report", std::nullopt, "", [&] {
    text::CsvWriter est(out_dir / "estimates.csv",
                        "outcome_id,risk_stratum,hr,hr_lo,hr_hi,ard,ard_lo,ard_hi,n_t,n_c,py_t,py_c,events_t,"
                        "events_c,diagnostics_pass");
    text::CsvWriter ver(out_dir / "verdicts.csv",
                        "outcome_id,risk_stratum,verdict,diagnostics_pass,max_abs_smd_after,equipoise,nc_used,"
                        "nc_significant,reasons");
    text::CsvWriter bal(out_dir / "balance.csv", "outcome_id,risk_stratum,covariate_id,name,smd_before,smd_after");
    text::CsvWriter ps(out_dir / "ps.csv",
                       "outcome_id,risk_stratum,subject_id,treatment,propensity,preference,match_partner,ps_stratum");
    text::CsvWriter risk(out_dir / "risk.csv", "subject_id,outcome_id,predicted_risk,risk_stratum");
    text::CsvWriter ncs(out_dir / "ncs.csv", "analysis_outcome_id,risk_stratum,outcome_id,log_hr,se,p,calibrated_p");
    text::CsvWriter exc(out_dir / "exclusions.csv", "outcome_id,subject_id,reason");
    std::optional<text::CsvWriter> km;
    if (config.report.emit_km_curves)
      km.emplace(out_dir / "km.csv",
                 "outcome_id,risk_stratum,ps_stratum,treatment,time,survival,greenwood_var,at_risk,events");

    ojson report;
    report["version"] = RISKSTRAT_VERSION;
    report["seed"] = settings.seed;
    report["config"] = config.echo();
    report["outcomes"] = ojson::array();

    for (std::size_t o = 0; o < outcomes.size(); ++o) {
      const auto& st = outcomes[o];
      const auto id = st.id;
      save_model(st.dev.model, out_dir / "models" / ("outcome_" + std::to_string(id) + ".json"));

      for (const auto& row : cohort.rows())
        if (row.prior_outcome.contains(id)) exc.row(id, row.subject, "prior_outcome");
      {
        std::vector<std::size_t> order(st.strata.subjects.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](auto a, auto b) { return st.strata.subjects[a] < st.strata.subjects[b]; });
        for (auto i : order) risk.row(st.strata.subjects[i], id, st.strata.predicted[i], st.strata.assignment[i]);
      }
      for (const auto& r : st.dev_balance)
        bal.row(id, "development", r.covariate_id, text::csv_quote(cov.name_of(r.covariate_id)), r.smd_before,
                r.smd_after);
      for (std::size_t i = 0; i < st.dev.ps.size(); ++i) {
        const auto& p = st.dev.ps;
        ps.row(id, "development", p.subjects[i], p.treatment[i], p.propensity[i], p.preference[i],
               p.match_partner[i] ? std::to_string(p.subjects[*p.match_partner[i]]) : std::string("NA"), "NA");
      }

      ojson oj;
      oj["outcome_id"] = id;
      const auto& m = st.dev.model;
      oj["risk_model"] = {{"source", st.source},
                          {"intercept", m.intercept},
                          {"lambda", m.lambda},
                          {"nonzero_coefficients", m.coefficients.size()},
                          {"n_eligible", st.dev.eligible.size()},
                          {"n_development", st.dev.development.size()},
                          {"development_events", st.dev.n_events},
                          {"max_abs_smd_after_matching", max_abs_smd_after(st.dev_balance)}};
      oj["performance"] = ojson::array();
      for (const auto& p : st.strata.performance) oj["performance"].push_back(ojson(to_json(p)));
      oj["risk_boundaries"] = st.strata.boundaries;
      oj["strata"] = ojson::array();

      for (std::size_t s = 0; s <= k; ++s) {
        const auto& a = analyses[o * (k + 1) + s];
        const auto& e = a.effect;
        const auto& label = e.risk_stratum;
        ++summary.strata;
        if (e.diagnostics_pass()) ++summary.passed;

        est.row(id, label, num(e.hr), num(e.hr_lo), num(e.hr_hi), num(e.ard), num(e.ard_lo), num(e.ard_hi), e.n_t,
                e.n_c, e.py_t, e.py_c, e.events_t, e.events_c, e.diagnostics_pass() ? "true" : "false");
        std::string reasons;
        for (const auto& r : e.verdict.reasons) reasons += (reasons.empty() ? "" : "; ") + r;
        ver.row(id, label, to_string(e.verdict.verdict), e.diagnostics_pass() ? "true" : "false",
                a.balance ? text::format_double(max_abs_smd_after(*a.balance)) : std::string("NA"), num(a.equipoise),
                summarize_controls(a.controls.estimates, settings.nc_alpha).used,
                summarize_controls(a.controls.estimates, settings.nc_alpha).significant, text::csv_quote(reasons));
        if (a.balance)
          for (const auto& r : *a.balance)
            bal.row(id, label, r.covariate_id, text::csv_quote(cov.name_of(r.covariate_id)), r.smd_before,
                    r.smd_after);
        for (std::size_t i = 0; i < a.ps.size(); ++i)
          ps.row(id, label, a.ps.subjects[i], a.ps.treatment[i], a.ps.propensity[i], a.ps.preference[i], "NA",
                 a.ps.ps_stratum[i] ? std::to_string(*a.ps.ps_stratum[i]) : std::string("NA"));
        for (const auto& c : a.controls.estimates)
          ncs.row(id, label, c.outcome_id, c.log_hr, c.se, standard_p(c.log_hr, c.se),
                  a.null ? text::format_double(calibrated_p(c.log_hr, c.se, *a.null)) : std::string("NA"));
        if (a.null)
          write_json(out_dir / "empirical_null" / (std::to_string(id) + "_" + label + ".json"),
                     ojson(to_json(*a.null)));
        if (km)
          for (const auto& rec : a.km)
            for (std::size_t j = 0; j < rec.curve.event_times.size(); ++j)
              km->row(id, label, rec.ps_stratum, rec.treatment, rec.curve.event_times[j], rec.curve.survival[j],
                      rec.curve.greenwood_var[j], rec.curve.at_risk[j], rec.curve.events[j]);

        if (s < k) oj["strata"].push_back(effect_json(a, settings));
        else oj["overall"] = effect_json(a, settings);
      }
      report["outcomes"].push_back(oj);
    }
    report["summary"] = {{"strata", summary.strata},
                         {"passed", summary.passed},
                         {"all_pass", summary.all_pass()},
                         {"exit_code", summary.exit_code()}};
    write_json(out_dir / "report.json", report);
  });
  return summary;
}

// ---------------------------------------------------------------- plot data

namespace {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::invalid_input, "missing column " + name);
    return static_cast<std::size_t>(it - header.begin());
  }
};

Table read_table(const fs::path& path) {
  const auto lines = text::read_lines(path);
  if (lines.empty()) throw Error(ErrorCode::invalid_input, path.string() + ": empty file");
  Table t;
  t.header = text::split_csv(lines[0]);
  for (std::size_t i = 1; i < lines.size(); ++i)
    if (!lines[i].empty()) t.rows.push_back(text::split_csv(lines[i]));
  return t;
}

double to_double(const std::string& s) {
  double v = 0.0;
  if (!text::parse_double(s, v)) throw Error(ErrorCode::invalid_input, "not a number: " + s);
  return v;
}

}  // namespace

void emit_plot_data(const fs::path& bundle_dir, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (!fs::is_directory(out_dir)) throw Error(ErrorCode::io, "cannot create " + out_dir.string());

  {
    // Preference-score densities per arm, 50 bins on [0, 1].
    const auto ps = read_table(bundle_dir / "ps.csv");
    const auto co = ps.col("outcome_id"), cs = ps.col("risk_stratum"), ct = ps.col("treatment"),
               cp = ps.col("preference");
    constexpr int bins = 50;
    std::map<std::tuple<std::string, std::string, std::string>, std::vector<double>> hist;
    std::vector<std::tuple<std::string, std::string, std::string>> order;
    for (const auto& r : ps.rows) {
      auto key = std::make_tuple(r[co], r[cs], r[ct]);
      auto [it, inserted] = hist.try_emplace(key, std::vector<double>(bins, 0.0));
      if (inserted) order.push_back(key);
      const int b = std::clamp(static_cast<int>(to_double(r[cp]) * bins), 0, bins - 1);
      it->second[static_cast<std::size_t>(b)] += 1.0;
    }
    text::CsvWriter w(out_dir / "preference_density.csv", "outcome_id,risk_stratum,treatment,bin_lo,bin_hi,density");
    for (const auto& key : order) {
      const auto& h = hist[key];
      double total = 0.0;
      for (double c : h) total += c;
      for (int b = 0; b < bins; ++b)
        w.row(std::get<0>(key), std::get<1>(key), std::get<2>(key), static_cast<double>(b) / bins,
              static_cast<double>(b + 1) / bins, h[static_cast<std::size_t>(b)] / total * bins);
    }
  }
  {
    const auto lines = text::read_lines(bundle_dir / "balance.csv");
    std::ofstream w(out_dir / "balance_scatter.csv", std::ios::binary | std::ios::trunc);
    if (!w) throw Error(ErrorCode::io, "cannot write balance_scatter.csv");
    for (const auto& l : lines) w << l << '\n';
  }
  {
    const auto ncs = read_table(bundle_dir / "ncs.csv");
    const auto ca = ncs.col("analysis_outcome_id"), cs = ncs.col("risk_stratum"), co = ncs.col("outcome_id"),
               cl = ncs.col("log_hr"), cse = ncs.col("se"), cp = ncs.col("p");
    text::CsvWriter w(out_dir / "nc_scatter.csv", "analysis_outcome_id,risk_stratum,outcome_id,log_hr,se,significant");
    double max_abs = 0.0;
    for (const auto& r : ncs.rows) {
      w.row(r[ca], r[cs], r[co], r[cl], r[cse], to_double(r[cp]) < 0.05 ? "true" : "false");
      max_abs = std::max(max_abs, std::abs(to_double(r[cl])));
    }
    // Significance boundary: points with se below |log_hr| / z are significant.
    text::CsvWriter b(out_dir / "nc_boundary.csv", "log_hr,se");
    const double extent = std::max(1.0, std::ceil(max_abs));
    constexpr int steps = 200;
    for (int i = 0; i <= steps; ++i) {
      const double x = -extent + 2.0 * extent * i / steps;
      b.row(x, std::abs(x) / kZ975);
    }
  }
  {
    const auto est = read_table(bundle_dir / "estimates.csv");
    text::CsvWriter w(out_dir / "forest.csv", "outcome_id,risk_stratum,hr,hr_lo,hr_hi,ard,ard_lo,ard_hi,diagnostics_pass");
    for (const auto& r : est.rows)
      w.row(r[est.col("outcome_id")], r[est.col("risk_stratum")], r[est.col("hr")], r[est.col("hr_lo")],
            r[est.col("hr_hi")], r[est.col("ard")], r[est.col("ard_lo")], r[est.col("ard_hi")],
            r[est.col("diagnostics_pass")]);
  }
}

}  // namespace riskstrat
