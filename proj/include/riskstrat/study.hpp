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

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "riskstrat/error.hpp"
#include "riskstrat/settings.hpp"

namespace riskstrat {

struct ReportOptions {
  bool emit_km_curves = false;
  int bootstrap_reps = 500;
};

struct StudyConfig {
  std::filesystem::path covariates;
  std::filesystem::path cohort;
  std::filesystem::path outcomes;
  std::filesystem::path output_dir;
  StudySettings settings;
  ReportOptions report;
  /// 0 = hardware concurrency. Never affects results.
  unsigned threads = 1;
  /// outcome -> model.json used instead of developing a risk model.
  std::map<OutcomeId, std::filesystem::path> external_models;

  /// Normalized settings echo for the report; omits paths to outputs and threads.
  nlohmann::json echo() const;
};

struct ConfigCheck {
  std::optional<StudyConfig> config;
  std::vector<std::string> errors;
};

/// Parses and validates a config object; relative paths resolve against `base`.
/// Every problem found is reported, none is thrown.
ConfigCheck parse_config(const nlohmann::json& j, const std::filesystem::path& base);
ConfigCheck validate_config(const std::filesystem::path& path);

/// Fatal study failure tagged with its pipeline position.
class StudyError : public Error {
 public:
  StudyError(ErrorCode code, std::string step, std::optional<OutcomeId> outcome, std::string stratum,
             const std::string& detail);
  const std::string& step() const noexcept { return step_; }
  std::optional<OutcomeId> outcome() const noexcept { return outcome_; }
  const std::string& stratum() const noexcept { return stratum_; }

 private:
  std::string step_;
  std::optional<OutcomeId> outcome_;
  std::string stratum_;
};

struct StudySummary {
  std::size_t strata = 0;
  std::size_t passed = 0;
  bool all_pass() const noexcept { return passed == strata; }
  /// 0 when every stratum passes its diagnostics, 2 otherwise.
  int exit_code() const noexcept { return all_pass() ? 0 : 2; }
};

/// Runs the full pipeline and writes the report bundle to config.output_dir.
/// Throws StudyError on a fatal failure.
StudySummary run_study(const StudyConfig& config);

/// Figure-ready CSVs derived from a finished report bundle.
void emit_plot_data(const std::filesystem::path& bundle_dir, const std::filesystem::path& out_dir);

}  // namespace riskstrat
