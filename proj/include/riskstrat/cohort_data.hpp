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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace riskstrat {

using SubjectId = std::int64_t;
using CovariateId = std::int64_t;
using OutcomeId = std::int64_t;

enum class CovariateKind { binary, continuous };

struct CovariateMeta {
  std::string name;
  CovariateKind kind = CovariateKind::binary;

  bool operator==(const CovariateMeta&) const = default;
};

struct CovariateEntry {
  SubjectId subject = 0;
  CovariateId covariate = 0;
  double value = 0.0;

  bool operator==(const CovariateEntry&) const = default;
};

/// Sparse subject x covariate table in long format.
///
/// Entries are kept sorted by (subject, covariate). Construction validates:
/// no duplicate pairs, binary covariates store only 1, every entry's subject
/// is listed, every entry's covariate has metadata.
class CovariateTable {
 public:
  CovariateTable() = default;
  CovariateTable(std::vector<SubjectId> subject_ids, std::vector<CovariateEntry> entries,
                 std::map<CovariateId, CovariateMeta> meta);

  const std::vector<SubjectId>& subject_ids() const noexcept { return subject_ids_; }
  const std::vector<CovariateEntry>& entries() const noexcept { return entries_; }
  const std::map<CovariateId, CovariateMeta>& meta() const noexcept { return meta_; }

  /// Entries for one subject, empty when the subject has none.
  std::span<const CovariateEntry> row(SubjectId subject) const;

  std::string name_of(CovariateId id) const;

  bool operator==(const CovariateTable& other) const {
    return subject_ids_ == other.subject_ids_ && entries_ == other.entries_ &&
           meta_ == other.meta_;
  }

 private:
  std::vector<SubjectId> subject_ids_;
  std::vector<CovariateEntry> entries_;
  std::map<CovariateId, CovariateMeta> meta_;
  std::unordered_map<SubjectId, std::pair<std::size_t, std::size_t>> row_index_;
};

struct CohortRow {
  SubjectId subject = 0;
  /// 1 = target cohort, 0 = comparator.
  int treatment = 0;
  int followup_days = 0;
  /// outcome -> first post-index event day.
  std::map<OutcomeId, int> outcomes;
  /// Outcomes observed before index.
  std::set<OutcomeId> prior_outcome;

  bool operator==(const CohortRow&) const = default;
};

/// Per-subject treatment, follow-up and outcome records, ascending subject id.
class CohortTable {
 public:
  CohortTable() = default;
  explicit CohortTable(std::vector<CohortRow> rows);

  const std::vector<CohortRow>& rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return rows_.size(); }
  bool empty() const noexcept { return rows_.empty(); }

  const CohortRow* find(SubjectId subject) const;
  const CohortRow& at(SubjectId subject) const;

  bool operator==(const CohortTable& other) const { return rows_ == other.rows_; }

 private:
  std::vector<CohortRow> rows_;
  std::unordered_map<SubjectId, std::size_t> index_;
};

/// Right-censored observation of one outcome over the time-at-risk window.
struct SurvivalObs {
  int time = 0;
  bool event = false;
};

/// Censoring at min(followup_days, time_at_risk_days); an event counts when
/// it falls inside that window.
SurvivalObs observe(const CohortRow& row, OutcomeId outcome, int time_at_risk_days);

/// Rows whose subject is in `subjects`, input order preserved. Throws on an
/// unknown id.
CohortTable restrict(const CohortTable& cohort, std::span<const SubjectId> subjects);

std::pair<CovariateTable, CohortTable> load_bundle(const std::filesystem::path& covariate_path,
                                                   const std::filesystem::path& cohort_path,
                                                   const std::filesystem::path& outcome_path);

/// Convenience overload reading covariates.csv, cohort.csv and outcomes.csv.
std::pair<CovariateTable, CohortTable> load_bundle(const std::filesystem::path& dir);

/// Writes covariates.csv, cohort.csv and outcomes.csv in canonical order.
void write_bundle(const CovariateTable& cov, const CohortTable& cohort,
                  const std::filesystem::path& dir);

}  // namespace riskstrat
