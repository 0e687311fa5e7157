//
// Copyright 2026 The corrleak Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "corrleak/harness.hpp"
#include "corrleak/kernels.hpp"

namespace {

struct CliOverrides {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = 0;
  bool paper_scale = false;
};

void add_common_flags(CLI::App* cmd, CliOverrides& overrides) {
  cmd->add_option("--config", overrides.config_path, "JSON config file");
  cmd->add_option("--out", overrides.out_dir, "output directory");
  cmd->add_option("--seed", overrides.seed, "master seed")
      ->each([&](const std::string&) { overrides.seed_set = true; });
  cmd->add_option("--workers", overrides.workers, "worker thread count");
  cmd->add_flag("--paper-scale", overrides.paper_scale,
                "use the full-scale experiment defaults");
}

int run(const std::string& experiment, const CliOverrides& overrides) {
  corrleak::ExperimentConfig cfg;
  if (!overrides.config_path.empty()) {
    std::ifstream in(overrides.config_path, std::ios::binary);
    if (!in) {
      std::cerr << "cannot open config: " << overrides.config_path << "\n";
      return 2;
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    cfg = corrleak::ExperimentConfig::from_json_text(buffer.str());
  }
  cfg.kind = corrleak::experiment_kind_from_name(experiment);
  if (overrides.seed_set) cfg.seed = overrides.seed;
  if (!overrides.out_dir.empty()) cfg.out_dir = overrides.out_dir;
  if (overrides.workers > 0) cfg.workers = overrides.workers;
  if (overrides.paper_scale) cfg.paper_scale = true;
  if (cfg.out_dir.empty()) cfg.out_dir = ".";

  corrleak::RunReport report = corrleak::run_experiment(cfg);
  corrleak::write_report(report, cfg.out_dir);
  std::cout << report.summary_json << "\n";
  std::cerr << "kernels: "
            << corrleak::kernels::backend_name(corrleak::kernels::active_backend())
            << ", wallclock: " << report.wallclock_s << "s\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"corrleak: correlation-leakage audit for ML models"};
  app.require_subcommand(1);

  const char* experiments[] = {"grid",
                               "increasing_n",
                               "mitigation_queries",
                               "mitigation_precision",
                               "real_data",
                               "aia",
                               "extract_constraints"};
  const char* descriptions[] = {
      "model-less/model-based accuracy over the constraint grid (n=3)",
      "both attacks for n in 3..10 under scenario S1/S2/S3",
      "attack accuracy as the query budget shrinks",
      "attack accuracy as confidence precision shrinks",
      "attack protocol on a loaded table (or synthetic stand-in)",
      "attribute inference: CI-AIA and baselines",
      "constraint extraction from a black-box model"};

  CliOverrides overrides;
  std::string chosen;
  for (int i = 0; i < 7; ++i) {
    CLI::App* cmd = app.add_subcommand(experiments[i], descriptions[i]);
    add_common_flags(cmd, overrides);
    cmd->callback([&chosen, name = std::string(experiments[i])] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage problems are config errors
  }

  try {
    return run(chosen, overrides);
  } catch (const corrleak::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const corrleak::ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const corrleak::SchemaError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
