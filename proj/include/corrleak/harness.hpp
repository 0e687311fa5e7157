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

#ifndef CORRLEAK_HARNESS_HPP
#define CORRLEAK_HARNESS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "corrleak/aia.hpp"
#include "corrleak/attacks.hpp"
#include "corrleak/copula.hpp"
#include "corrleak/models.hpp"

namespace corrleak {

enum class ExperimentKind {
  kGrid,
  kIncreasingN,
  kMitigationQueries,
  kMitigationPrecision,
  kRealData,
  kAia,
  kExtractConstraints,
};

ExperimentKind experiment_kind_from_name(const std::string& name);
const char* experiment_kind_name(ExperimentKind kind);

// One experiment run, resolved from JSON plus CLI overrides. Child random
// streams derive from the master seed keyed on
// (experiment stage, cell/target index, shadow index), so reruns and any
// worker count produce identical report bytes.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kIncreasingN;
  int n = 3;
  int bins = 3;
  int k_shadows = 1000;
  int q_queries = 100;
  int targets = 200;  // T' (per cell for the grid model-based part)
  std::size_t dataset_size = 1000;
  ModelKind model_kind = ModelKind::kLogisticRegression;
  ScenarioKind scenario = ScenarioKind::kS2;
  std::uint64_t seed = 0;
  int workers = 1;
  bool paper_scale = false;
  std::string out_dir;

  // grid
  int grid_resolution = 200;
  int grid_targets_per_cell = 100;
  int grid_model_based_cells = 0;  // 0 disables the model-based grid pass

  // target draws restricted to |constraint| >= this (0 = unrestricted)
  double min_abs_constraint = 0.0;

  // interval sampling depth for the model-less attack
  int interval_samples = 1000;

  // mitigation sweeps
  std::vector<int> query_sweep = {1, 5, 10, 50, 100};
  std::vector<int> precision_sweep = {1, 2, 3};  // digits; full/label added

  // real data / aia / extraction
  std::string dataset_path;
  std::string loader = "synthetic";  // fifa19|communities|musk|csv|synthetic
  std::string output_column;
  std::vector<std::string> drop_columns;
  std::string threshold = "median";
  int marginal_bins = 100;  // G
  int collections = 20;
  std::size_t target_size_cap = 0;  // 0 = use all records (fifa19 preset: 2000)
  int synthetic_columns = 8;
  std::size_t synthetic_rows = 4000;

  // aia
  int aia_records = 200;
  AiaParams aia;

  // extract-constraints
  int trials = 100;
  std::vector<int> q_tilde_sweep = {10, 50, 100, 500};
  double constraint_range = 1.0;

  static ExperimentConfig from_json_text(const std::string& text);
  void apply_paper_scale();
  void validate() const;
};

struct RunReport {
  std::string report_csv;
  std::string summary_json;
  // Auxiliary files keyed by name (grid cells, sweep tables).
  std::vector<std::pair<std::string, std::string>> aux_files;
  double wallclock_s = 0.0;
};

RunReport run_grid(const ExperimentConfig& cfg);
RunReport run_increasing_n(const ExperimentConfig& cfg);
RunReport run_mitigations(const ExperimentConfig& cfg);
RunReport run_real_data(const ExperimentConfig& cfg);
RunReport run_aia(const ExperimentConfig& cfg);
RunReport run_extract_constraints(const ExperimentConfig& cfg);
RunReport run_experiment(const ExperimentConfig& cfg);

// Writes report.csv, summary.json, and the auxiliary files under out_dir.
void write_report(const RunReport& report, const std::string& out_dir);

double ci_halfwidth(double p, std::size_t count);

// Binary classifier accuracy helpers shared by the runners.
double accuracy_of(const Model& model, const Dataset& data);

// ---------------------------------------------------------------------------
// Dataset loading

struct LoaderOptions {
  std::string output_column;  // empty = last numeric column
  std::vector<std::string> drop_columns;
  std::string threshold = "median";  // median | mean | ge:<value>
  int marginal_bins = 100;
  bool balance_classes = false;
  bool parse_currency = false;
  std::uint64_t seed = 0;
};

// Parsed and preprocessed table: categorical columns dropped, rows with
// missing values dropped, duplicate columns removed, output binarized.
// Fixed-threshold rules translate the raw output so shadow binarization can
// use the zero rule; median/mean pass through unchanged.
struct LoadedDataset {
  Dataset data;
  std::vector<double> raw_output;  // pre-binarization, aligned with rows
  std::vector<Marginal> marginals;  // inputs then raw output
  std::vector<std::string> input_names;
  ThresholdRule threshold_rule = ThresholdRule::kMedian;
};

LoadedDataset load_dataset(const std::string& name, const std::string& path,
                           const LoaderOptions& options);
LoadedDataset load_dataset_from_text(const std::string& name,
                                     const std::string& csv_text,
                                     const LoaderOptions& options);

// Stand-in for the real tables: copula data over uniform marginals from a
// randomly sampled correlation matrix, output binarized at its median.
LoadedDataset synthetic_master_dataset(int input_columns, std::size_t rows,
                                       int marginal_bins, RngStream& rng);

// Remaps a model trained on one column order to accept permuted inputs
// (perm[new] = old); exact weight reordering, no retraining.
Model permute_model_inputs(const Model& model, const std::vector<int>& perm);

}  // namespace corrleak

#endif  // CORRLEAK_HARNESS_HPP
