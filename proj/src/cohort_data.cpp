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

#include "riskstrat/cohort_data.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>
#include <unordered_set>

#include "riskstrat/error.hpp"
#include "riskstrat/text_io.hpp"

namespace riskstrat {

namespace fs = std::filesystem;

CovariateTable::CovariateTable(std::vector<SubjectId> subject_ids,
                               std::vector<CovariateEntry> entries,
                               std::map<CovariateId, CovariateMeta> meta)
    : subject_ids_(std::move(subject_ids)), entries_(std::move(entries)), meta_(std::move(meta)) {
  std::sort(subject_ids_.begin(), subject_ids_.end());
  if (std::adjacent_find(subject_ids_.begin(), subject_ids_.end()) != subject_ids_.end())
    throw Error(ErrorCode::invalid_input, "covariate table: duplicate subject id");

  std::sort(entries_.begin(), entries_.end(), [](const auto& a, const auto& b) {
    return std::tie(a.subject, a.covariate) < std::tie(b.subject, b.covariate);
  });
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (i > 0 && entries_[i - 1].subject == e.subject && entries_[i - 1].covariate == e.covariate)
      throw Error(ErrorCode::invalid_input,
                  "covariate table: duplicate entry (subject " + std::to_string(e.subject) +
                      ", covariate " + std::to_string(e.covariate) + ")");
    if (!std::binary_search(subject_ids_.begin(), subject_ids_.end(), e.subject))
      throw Error(ErrorCode::invalid_input,
                  "covariate table: entry for unknown subject " + std::to_string(e.subject));
    auto it = meta_.find(e.covariate);
    if (it == meta_.end())
      throw Error(ErrorCode::invalid_input,
                  "covariate table: no metadata for covariate " + std::to_string(e.covariate));
    if (!std::isfinite(e.value))
      throw Error(ErrorCode::invalid_input, "covariate table: non-finite value");
    if (it->second.kind == CovariateKind::binary && e.value != 1.0)
      throw Error(ErrorCode::invalid_input, "covariate table: binary covariate " +
                                                std::to_string(e.covariate) +
                                                " stores a value other than 1");
  }
  for (std::size_t i = 0; i < entries_.size();) {
    std::size_t j = i;
    while (j < entries_.size() && entries_[j].subject == entries_[i].subject) ++j;
    row_index_.emplace(entries_[i].subject, std::make_pair(i, j));
    i = j;
  }
}

std::span<const CovariateEntry> CovariateTable::row(SubjectId subject) const {
  auto it = row_index_.find(subject);
  if (it == row_index_.end()) return {};
  return std::span<const CovariateEntry>(entries_).subspan(it->second.first,
                                                           it->second.second - it->second.first);
}

std::string CovariateTable::name_of(CovariateId id) const {
  auto it = meta_.find(id);
  return it == meta_.end() ? std::to_string(id) : it->second.name;
}

CohortTable::CohortTable(std::vector<CohortRow> rows) : rows_(std::move(rows)) {
  std::stable_sort(rows_.begin(), rows_.end(),
                   [](const auto& a, const auto& b) { return a.subject < b.subject; });
  index_.reserve(rows_.size());
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const auto& r = rows_[i];
    if (!index_.emplace(r.subject, i).second)
      throw Error(ErrorCode::invalid_input,
                  "cohort table: duplicate subject " + std::to_string(r.subject));
    if (r.treatment != 0 && r.treatment != 1)
      throw Error(ErrorCode::invalid_input,
                  "cohort table: treatment must be 0 or 1 (subject " + std::to_string(r.subject) + ")");
    if (r.followup_days < 0)
      throw Error(ErrorCode::invalid_input, "cohort table: negative follow-up (subject " +
                                                std::to_string(r.subject) + ")");
    for (const auto& [outcome, day] : r.outcomes) {
      if (day < 0 || day > r.followup_days)
        throw Error(ErrorCode::invalid_input,
                    "cohort table: event day outside follow-up (subject " +
                        std::to_string(r.subject) + ", outcome " + std::to_string(outcome) + ")");
    }
  }
}

const CohortRow* CohortTable::find(SubjectId subject) const {
  auto it = index_.find(subject);
  return it == index_.end() ? nullptr : &rows_[it->second];
}

const CohortRow& CohortTable::at(SubjectId subject) const {
  const auto* row = find(subject);
  if (!row) throw Error(ErrorCode::invalid_input, "unknown subject " + std::to_string(subject));
  return *row;
}

SurvivalObs observe(const CohortRow& row, OutcomeId outcome, int time_at_risk_days) {
  const int end = std::min(row.followup_days, time_at_risk_days);
  auto it = row.outcomes.find(outcome);
  if (it != row.outcomes.end() && it->second <= end) return {it->second, true};
  return {end, false};
}

CohortTable restrict(const CohortTable& cohort, std::span<const SubjectId> subjects) {
  std::unordered_set<SubjectId> keep(subjects.begin(), subjects.end());
  for (auto s : keep)
    if (!cohort.find(s))
      throw Error(ErrorCode::invalid_input, "restrict: unknown subject " + std::to_string(s));
  std::vector<CohortRow> rows;
  rows.reserve(keep.size());
  for (const auto& r : cohort.rows())
    if (keep.count(r.subject)) rows.push_back(r);
  return CohortTable(std::move(rows));
}

namespace {

[[noreturn]] void row_error(const fs::path& file, std::size_t line, const std::string& what) {
  throw Error(ErrorCode::invalid_input,
              file.filename().string() + ":" + std::to_string(line) + ": " + what);
}

void expect_header(const std::vector<std::string>& lines, const fs::path& file,
                   std::string_view header) {
  if (lines.empty() || lines.front() != header)
    row_error(file, 1, "expected header '" + std::string(header) + "'");
}

const char* kind_name(CovariateKind k) { return k == CovariateKind::binary ? "binary" : "continuous"; }

}  // namespace

std::pair<CovariateTable, CohortTable> load_bundle(const fs::path& covariate_path,
                                                   const fs::path& cohort_path,
                                                   const fs::path& outcome_path) {
  // cohort.csv
  auto cohort_lines = text::read_lines(cohort_path);
  expect_header(cohort_lines, cohort_path, "subject_id,treatment,followup_days");
  std::vector<CohortRow> rows;
  std::unordered_map<SubjectId, std::size_t> index;
  for (std::size_t i = 1; i < cohort_lines.size(); ++i) {
    if (cohort_lines[i].empty()) continue;
    auto f = text::split(cohort_lines[i]);
    CohortRow r;
    if (f.size() != 3) row_error(cohort_path, i + 1, "expected 3 fields");
    if (!text::parse_int(f[0], r.subject)) row_error(cohort_path, i + 1, "bad subject_id");
    if (!text::parse_int(f[1], r.treatment) || (r.treatment != 0 && r.treatment != 1))
      row_error(cohort_path, i + 1, "treatment must be 0 or 1");
    if (!text::parse_int(f[2], r.followup_days) || r.followup_days < 0)
      row_error(cohort_path, i + 1, "followup_days must be a non-negative integer");
    if (!index.emplace(r.subject, rows.size()).second)
      row_error(cohort_path, i + 1, "duplicate subject " + std::to_string(r.subject));
    rows.push_back(std::move(r));
  }

  // outcomes.csv
  auto outcome_lines = text::read_lines(outcome_path);
  if (!outcome_lines.empty())
    expect_header(outcome_lines, outcome_path, "subject_id,outcome_id,event_day,prior_flag");
  for (std::size_t i = 1; i < outcome_lines.size(); ++i) {
    if (outcome_lines[i].empty()) continue;
    auto f = text::split(outcome_lines[i]);
    if (f.size() != 4) row_error(outcome_path, i + 1, "expected 4 fields");
    SubjectId subject;
    OutcomeId outcome;
    int prior = 0;
    if (!text::parse_int(f[0], subject)) row_error(outcome_path, i + 1, "bad subject_id");
    if (!text::parse_int(f[1], outcome)) row_error(outcome_path, i + 1, "bad outcome_id");
    if (!text::parse_int(f[3], prior) || (prior != 0 && prior != 1))
      row_error(outcome_path, i + 1, "prior_flag must be 0 or 1");
    auto it = index.find(subject);
    if (it == index.end()) row_error(outcome_path, i + 1, "unknown subject " + std::to_string(subject));
    auto& row = rows[it->second];
    if (prior == 1) {
      if (!f[2].empty()) row_error(outcome_path, i + 1, "prior rows carry an empty event_day");
      if (!row.prior_outcome.insert(outcome).second)
        row_error(outcome_path, i + 1, "duplicate prior record");
      continue;
    }
    int day;
    if (!text::parse_int(f[2], day) || day < 0)
      row_error(outcome_path, i + 1, "event_day must be a non-negative integer");
    if (day > row.followup_days) row_error(outcome_path, i + 1, "event_day exceeds followup_days");
    if (!row.outcomes.emplace(outcome, day).second)
      row_error(outcome_path, i + 1, "duplicate event record");
  }

  // covariate_ref.csv is optional; without it kinds are inferred and names
  // default to covariate_<id>.
  std::map<CovariateId, CovariateMeta> meta;
  const auto ref_path = covariate_path.parent_path() / "covariate_ref.csv";
  bool have_ref = fs::exists(ref_path);
  if (have_ref) {
    auto ref_lines = text::read_lines(ref_path);
    expect_header(ref_lines, ref_path, "covariate_id,name,kind");
    for (std::size_t i = 1; i < ref_lines.size(); ++i) {
      if (ref_lines[i].empty()) continue;
      auto f = text::split(ref_lines[i]);
      if (f.size() != 3) row_error(ref_path, i + 1, "expected 3 fields");
      CovariateId id;
      if (!text::parse_int(f[0], id)) row_error(ref_path, i + 1, "bad covariate_id");
      CovariateKind kind;
      if (f[2] == "binary") kind = CovariateKind::binary;
      else if (f[2] == "continuous") kind = CovariateKind::continuous;
      else row_error(ref_path, i + 1, "kind must be binary or continuous");
      if (!meta.emplace(id, CovariateMeta{std::string(f[1]), kind}).second)
        row_error(ref_path, i + 1, "duplicate covariate_id");
    }
  }

  auto cov_lines = text::read_lines(covariate_path);
  expect_header(cov_lines, covariate_path, "subject_id,covariate_id,value");
  std::vector<CovariateEntry> entries;
  entries.reserve(cov_lines.size());
  std::set<std::pair<SubjectId, CovariateId>> seen;
  std::map<CovariateId, bool> all_ones;
  for (std::size_t i = 1; i < cov_lines.size(); ++i) {
    if (cov_lines[i].empty()) continue;
    auto f = text::split(cov_lines[i]);
    if (f.size() != 3) row_error(covariate_path, i + 1, "expected 3 fields");
    CovariateEntry e;
    if (!text::parse_int(f[0], e.subject)) row_error(covariate_path, i + 1, "bad subject_id");
    if (!text::parse_int(f[1], e.covariate)) row_error(covariate_path, i + 1, "bad covariate_id");
    if (!text::parse_double(f[2], e.value) || !std::isfinite(e.value))
      row_error(covariate_path, i + 1, "value must be a finite number");
    if (!index.count(e.subject))
      row_error(covariate_path, i + 1, "unknown subject " + std::to_string(e.subject));
    if (!seen.emplace(e.subject, e.covariate).second)
      row_error(covariate_path, i + 1,
                "duplicate (subject_id, covariate_id) pair (" + std::to_string(e.subject) + ", " +
                    std::to_string(e.covariate) + ")");
    if (have_ref) {
      auto it = meta.find(e.covariate);
      if (it == meta.end())
        row_error(covariate_path, i + 1, "covariate " + std::to_string(e.covariate) +
                                             " missing from covariate_ref.csv");
      if (it->second.kind == CovariateKind::binary && e.value != 1.0)
        row_error(covariate_path, i + 1, "binary covariate must carry value 1");
    } else {
      auto [it, inserted] = all_ones.emplace(e.covariate, true);
      it->second = it->second && e.value == 1.0;
    }
    entries.push_back(e);
  }
  if (!have_ref) {
    for (const auto& [id, ones] : all_ones)
      meta.emplace(id, CovariateMeta{"covariate_" + std::to_string(id),
                                     ones ? CovariateKind::binary : CovariateKind::continuous});
  }

  std::vector<SubjectId> subjects;
  subjects.reserve(rows.size());
  for (const auto& r : rows) subjects.push_back(r.subject);
  return {CovariateTable(std::move(subjects), std::move(entries), std::move(meta)),
          CohortTable(std::move(rows))};
}

std::pair<CovariateTable, CohortTable> load_bundle(const fs::path& dir) {
  return load_bundle(dir / "covariates.csv", dir / "cohort.csv", dir / "outcomes.csv");
}

void write_bundle(const CovariateTable& cov, const CohortTable& cohort, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw Error(ErrorCode::io, "cannot create output directory " + dir.string());
  for (const auto& e : cov.entries())
    if (!cohort.find(e.subject))
      throw Error(ErrorCode::invalid_input,
                  "write_bundle: covariate entry for subject " + std::to_string(e.subject) +
                      " not in cohort");

  {
    text::CsvWriter out(dir / "covariates.csv", "subject_id,covariate_id,value");
    for (const auto& e : cov.entries()) out.row(e.subject, e.covariate, e.value);
  }
  {
    text::CsvWriter out(dir / "covariate_ref.csv", "covariate_id,name,kind");
    for (const auto& [id, m] : cov.meta()) out.row(id, m.name, kind_name(m.kind));
  }
  {
    text::CsvWriter out(dir / "cohort.csv", "subject_id,treatment,followup_days");
    for (const auto& r : cohort.rows()) out.row(r.subject, r.treatment, r.followup_days);
  }
  {
    text::CsvWriter out(dir / "outcomes.csv", "subject_id,outcome_id,event_day,prior_flag");
    for (const auto& r : cohort.rows()) {
      std::set<OutcomeId> ids(r.prior_outcome);
      for (const auto& [o, d] : r.outcomes) ids.insert(o);
      for (auto o : ids) {
        if (auto it = r.outcomes.find(o); it != r.outcomes.end()) out.row(r.subject, o, it->second, 0);
        if (r.prior_outcome.count(o)) out.row(r.subject, o, "", 1);
      }
    }
  }
}

}  // namespace riskstrat
