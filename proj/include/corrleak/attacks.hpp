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

#ifndef CORRLEAK_ATTACKS_HPP
#define CORRLEAK_ATTACKS_HPP

#include <optional>
#include <string>
#include <vector>

#include "corrleak/copula.hpp"
#include "corrleak/corrmat.hpp"
#include "corrleak/models.hpp"
#include "corrleak/rng.hpp"

namespace corrleak {

// B equal-width bins over [-1, 1]; bin b covers [(2(b-1)-B)/B, (2b-B)/B),
// with the last bin closed at 1. Bins are 1-based.
struct BinSpec {
  int b = 3;
};

int bin_of(double v, BinSpec spec);
double bin_left(int b, BinSpec spec);
double bin_right(int b, BinSpec spec);

struct Interval {
  double lo = -1.0;
  double hi = 1.0;
};

// Feasible range of the target coefficient for n=3 given the two
// input-output constraints: [cos(t1+t2), cos(t1-t2)] with t_i = arccos(rho_i).
Interval closed_form_interval(double rho1, double rho2);

// Min/max of the target entry over k draws from the scenario sampler.
Interval empirical_interval(const Scenario& scenario, int n, int k_samples,
                            RngStream& rng);

// Majority-bin rule: an interval inside one bin predicts it; an interval
// straddling two bins predicts the better covered one (ties to the lower
// bin); once any bin is fully covered the prediction is uniform over all
// B bins.
int model_less_predict(Interval iv, BinSpec spec, RngStream& rng);

// The forced bin for B=3 when the closed-form interval lies entirely in one
// bin, nullopt otherwise. Agrees with model_less_predict wherever it fires.
std::optional<int> certain_region(double rho1, double rho2, BinSpec spec);

enum class FeatureMode { kFull, kRounded, kLabelOnly };

struct FeatureSpec {
  FeatureMode mode = FeatureMode::kFull;
  int digits = 0;  // kRounded: decimal digits kept (truncation)
};

// Class-1 confidence per query record, optionally truncated to a digit
// count or reduced to the predicted label. A score of exactly 0.5 maps to
// label 1 under kLabelOnly.
std::vector<double> extract_features(const Model& model, const Dataset& query,
                                     const FeatureSpec& spec);

enum class FeatureSource { kConfidence, kWeightsRaw, kWeightsCanonical };

struct MetaDataset {
  int q = 0;                     // features per row
  std::vector<double> features;  // row-major k x q
  std::vector<int> labels;       // 1-based bins

  std::size_t k() const { return labels.size(); }
  std::string to_csv() const;
};

struct MetaClassifier {
  // One-vs-rest logistic heads (LR targets) or a B-way MLP head (MLP targets).
  std::vector<LogisticRegressionModel> lr_heads;
  std::optional<MlpModel> mlp;

  int predict(std::span<const double> features) const;
};

// Trains the meta-classifier matched to the target family. For LR a 90/10
// split measures holdout accuracy and the deployed heads are refit on all
// rows; the MLP variant early-stops on its internal 10% holdout and reports
// the best accuracy seen there.
struct MetaTrainResult {
  MetaClassifier classifier;
  double holdout_accuracy = 0.0;
};

MetaTrainResult train_meta(const MetaDataset& meta, ModelKind kind, BinSpec bins,
                           RngStream& rng);

struct AttackParams {
  int k_shadows = 1000;
  int q_queries = 100;
  BinSpec bins{3};
  ModelKind model_kind = ModelKind::kLogisticRegression;
  TrainConfig train_cfg;
  std::size_t shadow_size = 1000;  // records per shadow dataset, = |D_T|
  FeatureSpec feature;
  FeatureSource source = FeatureSource::kConfidence;
  ThresholdRule threshold = ThresholdRule::kZero;
  bool shift = false;
  ShiftParams shift_params;
  int workers = 1;
};

struct AttackResult {
  int predicted_bin = 0;
  double meta_holdout_acc = 0.0;
  std::vector<double> shifted_constraints;  // empty when no shift ran
  double shift_gap = 0.0;
  std::vector<int> label_histogram;  // shadow labels per bin
};

// Full shadow-model pipeline: (optionally) shift the constraints, sample K
// matrices and shadow datasets, train K shadow models, extract features on
// one shared query dataset, label rows with the binned empirical target
// correlation of each shadow dataset, train the meta-classifier, and apply
// it to the target model's feature vector.
AttackResult run_model_based_attack(const Model& target, const Scenario& scenario,
                                    const std::vector<Marginal>& marginals,
                                    const AttackParams& params, RngStream& rng);

// Shadow models reduced to their raw query confidences plus the empirical
// target correlation of each shadow dataset. Mitigation sweeps rebuild
// features (fewer queries, lower precision) and retrain the meta-classifier
// from this without retraining any shadow model; labels are re-binned per B.
struct ShadowEnsemble {
  Dataset query;                    // q_max records, shared with the target
  std::vector<double> confidences;  // k x q_max
  std::vector<double> shadow_target_corr;  // k values
  int k = 0;
  int q_max = 0;
  std::vector<double> shifted_constraints;
  double shift_gap = 0.0;
};

ShadowEnsemble build_shadow_ensemble(const Scenario& scenario,
                                     const std::vector<Marginal>& marginals,
                                     const AttackParams& params, RngStream& rng);

AttackResult attack_with_ensemble(const ShadowEnsemble& ensemble,
                                  const Model& target, int q,
                                  const FeatureSpec& feature, BinSpec bins,
                                  ModelKind kind, RngStream& meta_rng);

// JSON report for one attack run: scenario, parameters, the predicted bin,
// the true bin when known, the meta diagnostic, and the feasible interval.
std::string attack_report_json(const Scenario& scenario,
                               const AttackParams& params,
                               const AttackResult& result,
                               std::optional<int> true_bin,
                               std::optional<Interval> interval);

struct ConstraintEstimate {
  std::vector<double> values;
  bool degenerate = false;  // model answered with a single class; values are 0
};

// Probes the model on q_tilde records drawn coordinate-wise independent from
// the input marginals and returns the Pearson coefficient between each input
// column and the predicted 0/1 label.
ConstraintEstimate extract_constraints(const Model& model,
                                       const std::vector<Marginal>& input_marginals,
                                       int q_tilde, RngStream& rng);

}  // namespace corrleak

#endif  // CORRLEAK_ATTACKS_HPP
