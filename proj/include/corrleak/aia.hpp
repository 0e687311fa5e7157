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

#ifndef CORRLEAK_AIA_HPP
#define CORRLEAK_AIA_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "corrleak/attacks.hpp"
#include "corrleak/copula.hpp"
#include "corrleak/models.hpp"
#include "corrleak/rng.hpp"

namespace corrleak {

// A training record with the sensitive first attribute removed: the attacker
// sees x_2..x_{n-1} and the binary label.
struct PartialRecord {
  std::vector<double> known;  // values of attributes 2..n-1
  std::uint8_t label = 0;
};

struct AiaParams {
  int shadow_datasets = 1000;       // S'
  std::size_t dataset_size = 1000;  // records per shadow dataset
  int sub_intervals = 100;          // G
  double initial_resolution = 2.0;  // m_i
  double resolution_increment = 0.5;  // delta_i
  ThresholdRule threshold = ThresholdRule::kMedian;
  int workers = 1;
};

// Pairwise input-correlation knowledge produced by the correlation attack:
// the inferred bin for each pair (i, j), i < j over the n-1 inputs, plus the
// per-pair shifted constraint vectors that generated the shadow data.
struct InferredPairs {
  BinSpec bins{3};
  // Upper-triangular order (0,1), (0,2), ..., (n-3, n-2).
  std::vector<int> pair_bins;
  std::vector<std::vector<double>> shifted_constraints;
};

// Synthetic matching pool: shadow datasets generated under the averaged
// shifted constraints, optionally filtered so every input-pair correlation
// falls in its inferred bin, then concatenated.
Dataset build_synthetic_pool(const std::vector<double>& avg_constraints,
                             const std::vector<Marginal>& marginals,
                             const InferredPairs* filter, const AiaParams& params,
                             RngStream& rng);

// Mean sensitive value over pool records matching the partial record within
// the per-attribute tolerance (widened until a match exists) and the label.
double match_and_average(const Dataset& pool,
                         const std::vector<Marginal>& marginals,
                         const PartialRecord& record, const AiaParams& params);

double ci_aia(const Dataset& pool, const std::vector<Marginal>& marginals,
              const PartialRecord& record, const AiaParams& params);

// Baseline of Fredrikson et al.: scores each marginal sub-interval by
// p(x_1^g) * p(y | model prediction) using the provided confusion matrix
// (rows indexed by the predicted class, columns by the true class).
double fredrikson_aia(const Model& model, const PartialRecord& record,
                      const Marginal& f1,
                      const std::array<std::array<double, 2>, 2>& confusion,
                      int g, RngStream& rng);

// CSMIA: queries the model once per sub-interval; returns the matching value
// (unique match), the most confident match (several), or the least confident
// non-match (none). Ties go to the lowest sub-interval.
double csmia_aia(const Model& model, const PartialRecord& record,
                 const Marginal& f1, int g, RngStream& rng);

double marginal_prior(const Marginal& f1, RngStream& rng);

// Tertile edges of the sensitive marginal, for binned-accuracy evaluation.
std::array<double, 2> tertile_edges(const Marginal& f1);
int tertile_bin(double v, const std::array<double, 2>& edges);

}  // namespace corrleak

#endif  // CORRLEAK_AIA_HPP
