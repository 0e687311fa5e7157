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

#ifndef CORRLEAK_MODELS_HPP
#define CORRLEAK_MODELS_HPP

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "corrleak/copula.hpp"
#include "corrleak/errors.hpp"
#include "corrleak/rng.hpp"

namespace corrleak {

struct TrainConfig {
  double learning_rate = 0.05;
  int max_epochs = 100;
  int patience = 5;
  double holdout_fraction = 0.1;
  int batch_size = 0;  // 0 = full batch
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
};

struct LogisticRegressionModel {
  std::vector<double> weights;
  double bias = 0.0;
};

// Fixed architecture: two ReLU hidden layers of 20 and 10 units and a
// softmax head. Weight blocks are row-major with rows indexed by the input
// side, so w1 is in_dim x 20, w2 is 20 x 10, w3 is 10 x out_dim.
struct MlpModel {
  int in_dim = 0;
  int h1 = 20;
  int h2 = 10;
  int out_dim = 2;
  std::vector<double> w1, b1, w2, b2, w3, b3;
};

// L2-regularized logistic loss (strength 1.0 on the weights, none on the
// bias) minimized by L-BFGS with backtracking, full batch, at most
// cfg.max_epochs accepted steps, stopping at max-gradient 1e-4. Deterministic
// given (dataset, seed); accepted steps never increase the loss.
LogisticRegressionModel train_lr(const Dataset& d, const TrainConfig& cfg);

// Same trainer over an explicit feature block; used by the meta-classifiers.
LogisticRegressionModel fit_binary_logistic(const double* x,
                                            const std::uint8_t* y, std::size_t m,
                                            int dim, int max_iter = 100,
                                            double tol = 1e-4);

// Gradient descent on mean cross-entropy (full batch or minibatch per
// cfg.batch_size), fan-in uniform init from cfg.seed, early stopping on a
// 10% holdout with cfg.patience non-improving epochs, best weights restored.
MlpModel train_mlp(const Dataset& d, const TrainConfig& cfg);

// Multi-class variant over an explicit feature block; labels in 0..classes-1.
MlpModel train_mlp_classifier(const double* x, const int* y, std::size_t m,
                              int dim, int classes, const TrainConfig& cfg);

std::array<double, 2> predict_proba(const LogisticRegressionModel& model,
                                    std::span<const double> x);
std::vector<double> predict_proba(const MlpModel& model, std::span<const double> x);

std::vector<double> flatten_weights(const LogisticRegressionModel& model);
std::vector<double> flatten_weights(const MlpModel& model);

// Hidden neurons reordered per layer by ascending sum of incoming weights
// plus bias (ties by index); outgoing weights follow. The represented
// function is unchanged, entry for entry.
MlpModel canonicalized(const MlpModel& model);
std::vector<double> canonical_weights(const MlpModel& model);

// d log p_cls(x) / d(flattened weights); layout matches flatten_weights.
std::vector<double> log_prob_gradient(const MlpModel& model,
                                      std::span<const double> x, int cls);

MlpModel mlp_from_flat(int in_dim, int out_dim, std::span<const double> flat);

// Either target-model family behind one query surface.
using Model = std::variant<LogisticRegressionModel, MlpModel>;

enum class ModelKind { kLogisticRegression, kMlp };

const char* model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);

// Probability assigned to class 1.
double confidence(const Model& model, std::span<const double> x);
std::vector<double> flatten_model_weights(const Model& model);

std::string model_to_json(const Model& model);
Model model_from_json(const std::string& text);

}  // namespace corrleak

#endif  // CORRLEAK_MODELS_HPP
