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

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "riskstrat/simulator.hpp"
#include "riskstrat/study.hpp"

namespace fs = std::filesystem;
using namespace riskstrat;

namespace {

int cmd_simulate(const fs::path& spec_path, const fs::path& out) {
  std::ifstream in(spec_path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + spec_path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_input, spec_path.string() + ": " + e.what());
  }
  const auto spec = simulation_spec_from_json(j);
  const auto sim = simulate(spec);
  write_bundle(sim.covariates, sim.cohort, out);
  write_truth(sim.truth, out / "truth.csv");
  std::cout << "wrote " << sim.cohort.size() << " subjects to " << out.string() << '\n';
  return 0;
}

int cmd_validate(const fs::path& config) {
  const auto check = validate_config(config);
  for (const auto& e : check.errors) std::cerr << "error: " << e << '\n';
  if (!check.errors.empty()) return 1;
  std::cout << config.string() << ": ok\n";
  return 0;
}

struct RunFlags {
  fs::path config;
  fs::path out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<int> bootstrap_reps;
  bool km = false;
};

int cmd_run(const RunFlags& flags) {
  auto check = validate_config(flags.config);
  for (const auto& e : check.errors) std::cerr << "error: " << e << '\n';
  if (!check.config) return 1;
  auto cfg = *check.config;
  if (!flags.out.empty()) cfg.output_dir = flags.out;
  if (cfg.output_dir.empty()) {
    std::cerr << "error: no output directory (use --out or output_dir)\n";
    return 1;
  }
  if (flags.seed) cfg.settings.seed = *flags.seed;
  if (flags.threads) cfg.threads = *flags.threads;
  if (flags.bootstrap_reps) cfg.report.bootstrap_reps = *flags.bootstrap_reps;
  if (flags.km) cfg.report.emit_km_curves = true;
  const auto summary = run_study(cfg);
  std::cout << summary.passed << " of " << summary.strata << " strata passed diagnostics; report in "
            << cfg.output_dir.string() << '\n';
  return summary.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Risk-stratified treatment-effect heterogeneity on observational cohorts"};
  app.set_version_flag("--version", std::string(RISKSTRAT_VERSION));
  app.require_subcommand(1);

  fs::path spec, sim_out;
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic bundle with ground truth");
  sim->add_option("--spec", spec, "Simulation spec JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", sim_out, "Output directory")->required();

  fs::path validate_path;
  auto* val = app.add_subcommand("validate", "Check a study config and report every problem");
  val->add_option("--config", validate_path, "Study config JSON")->required();

  RunFlags flags;
  auto* run = app.add_subcommand("run", "Run a study and write the report bundle");
  run->add_option("--config", flags.config, "Study config JSON")->required();
  run->add_option("--out", flags.out, "Output directory (overrides output_dir)");
  run->add_option("--seed", flags.seed, "Override settings.seed");
  run->add_option("--threads", flags.threads, "Worker threads, 0 = all cores");
  run->add_option("--bootstrap-reps", flags.bootstrap_reps, "Override report.bootstrap_reps");
  run->add_flag("--km", flags.km, "Emit km.csv");

  fs::path bundle, plot_out;
  auto* plot = app.add_subcommand("plot-data", "Derive figure-ready CSVs from a report bundle");
  plot->add_option("--bundle", bundle, "Report bundle directory")->required()->check(CLI::ExistingDirectory);
  plot->add_option("--out", plot_out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*sim) return cmd_simulate(spec, sim_out);
    if (*val) return cmd_validate(validate_path);
    if (*run) return cmd_run(flags);
    if (*plot) {
      emit_plot_data(bundle, plot_out);
      return 0;
    }
  } catch (const StudyError& e) {
    std::cerr << "fatal [" << to_string(e.code()) << "] " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "fatal [" << to_string(e.code()) << "] " << e.what() << '\n';
    return 1;
  }
  return 1;
}
