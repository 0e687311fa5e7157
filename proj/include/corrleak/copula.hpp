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

#ifndef CORRLEAK_COPULA_HPP
#define CORRLEAK_COPULA_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "corrleak/corrmat.hpp"
#include "corrleak/errors.hpp"
#include "corrleak/rng.hpp"

namespace corrleak {

// One-way marginal: either the analytic standard normal or an empirical
// distribution over G sub-intervals with linear interpolation inside each.
struct Marginal {
  enum class Kind { kStandardNormal, kEmpirical };

  Kind kind = Kind::kStandardNormal;
  std::vector<double> edges;   // G + 1 strictly increasing values
  std::vector<double> masses;  // G non-negative values summing to 1

  static Marginal standard_normal();
  static Marginal empirical(std::vector<double> edges, std::vector<double> masses);

  int bins() const { return static_cast<int>(masses.size()); }
  // Width of the support; the standard normal uses its 0.001..0.999
  // quantile range as a practical span.
  double span() const;

  std::string to_json() const;
  static Marginal from_json(const std::string& text);
};

// Equal-width discretization over [min, max] of the samples.
Marginal fit_marginal(std::span<const double> samples, int g);

// F^{-1}(u) for u in (0, 1). Standard normal uses a rational approximation;
// empirical marginals interpolate linearly within the located sub-interval.
double inverse_cdf(const Marginal& marg, double u);
double cdf(const Marginal& marg, double x);

double std_normal_quantile(double u);
double std_normal_cdf(double x);

enum class ThresholdRule { kZero, kMedian, kMean };

const char* threshold_rule_name(ThresholdRule rule);
ThresholdRule threshold_rule_from_name(const std::string& name);

// m records of input_dim real inputs and one binary label.
struct Dataset {
  std::vector<double> inputs;         // row-major m x input_dim
  std::vector<std::uint8_t> labels;   // m values in {0, 1}
  int input_dim = 0;
  std::optional<CorrMatrix> provenance;

  std::size_t m() const { return labels.size(); }
  std::span<const double> row(std::size_t r) const {
    return {inputs.data() + r * static_cast<std::size_t>(input_dim),
            static_cast<std::size_t>(input_dim)};
  }

  // Headerless CSV, inputs then label, 17 significant digits.
  std::string to_csv() const;
  static Dataset from_csv(const std::string& text);
};

// Draws m records from the Gaussian copula parametrized by C and the
// marginals; the last coordinate is binarized into the label using the rule
// (0 for kZero, else the generated column's median or mean). raw_output,
// when given, receives the last coordinate before binarization.
Dataset sample_copula(const CorrMatrix& c, const std::vector<Marginal>& marginals,
                      std::size_t m, ThresholdRule rule, RngStream& rng,
                      std::vector<double>* raw_output = nullptr);

// Pearson matrix over the input columns plus the 0/1 label as the last
// variable. Throws ZeroVariance naming the offending column.
CorrMatrix empirical_corr(const Dataset& d);

struct ShiftParams {
  int shadow_count = 100;       // S
  std::size_t dataset_size = 1000;  // N_D
  double tolerance = 0.01;      // e
  int max_iterations = 10;      // M
  ThresholdRule threshold = ThresholdRule::kMedian;
  int workers = 1;
};

struct ShiftResult {
  std::vector<double> shifted;
  double gap = 0.0;
  int iterations = 0;
};

// Iteratively corrects the copula constraint vector until the mean empirical
// input-output correlations of the generated shadow data track the requested
// values within the tolerance; best-effort with the achieved gap reported.
ShiftResult shift_constraints(const std::vector<double>& v,
                              const std::vector<Marginal>& marginals,
                              const ShiftParams& params, RngStream& rng);

}  // namespace corrleak

#endif  // CORRLEAK_COPULA_HPP
