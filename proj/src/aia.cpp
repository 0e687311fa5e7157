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

#include "corrleak/aia.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "corrleak/parallel.hpp"

namespace corrleak {

Dataset build_synthetic_pool(const std::vector<double>& avg_constraints,
                             const std::vector<Marginal>& marginals,
                             const InferredPairs* filter, const AiaParams& params,
                             RngStream& rng) {
  int n = static_cast<int>(marginals.size());
  if (static_cast<int>(avg_constraints.size()) != n - 1)
    throw DomainError("need n-1 constraints for the synthetic pool");

  std::vector<Dataset> kept(static_cast<std::size_t>(params.shadow_datasets));
  std::vector<char> keep(static_cast<std::size_t>(params.shadow_datasets), 0);
  parallel_for(
      static_cast<std::size_t>(params.shadow_datasets), params.workers,
      [&](std::size_t s) {
        RngStream stream = rng.child(s);
        CorrMatrix c = sample_s2(n, avg_constraints, stream);
        Dataset d = sample_copula(c, marginals, params.dataset_size,
                                  params.threshold, stream);
        if (filter != nullptr) {
          CorrMatrix emp = empirical_corr(d);
          std::size_t pair = 0;
          for (int i = 0; i < n - 1; ++i) {
            for (int j = i + 1; j < n - 1; ++j, ++pair) {
              double v = std::clamp(emp.at(i, j), -1.0, 1.0);
              if (bin_of(v, filter->bins) != filter->pair_bins[pair]) return;
            }
          }
        }
        kept[s] = std::move(d);
        keep[s] = 1;
      });

  Dataset pool;
  pool.input_dim = n - 1;
  for (std::size_t s = 0; s < kept.size(); ++s) {
    if (!keep[s]) continue;
    pool.inputs.insert(pool.inputs.end(), kept[s].inputs.begin(),
                       kept[s].inputs.end());
    pool.labels.insert(pool.labels.end(), kept[s].labels.begin(),
                       kept[s].labels.end());
  }
  if (pool.labels.empty())
    throw NoSurvivingDatasets("no shadow dataset matched the inferred bins");
  return pool;
}

double match_and_average(const Dataset& pool,
                         const std::vector<Marginal>& marginals,
                         const PartialRecord& record, const AiaParams& params) {
  int n = static_cast<int>(marginals.size());
  if (static_cast<int>(record.known.size()) != n - 2)
    throw ShapeMismatch("partial record has wrong attribute count");
  bool label_present = false;
  for (std::uint8_t y : pool.labels)
    if (y == record.label) {
      label_present = true;
      break;
    }
  if (!label_present)
    throw NoMatchingLabel("synthetic pool lacks the record's label");

  // Sub-interval width per known attribute, from its own G-binning.
  std::vector<double> width(record.known.size());
  for (std::size_t i = 0; i < width.size(); ++i)
    width[i] = marginals[i + 1].span() / params.sub_intervals;

  std::vector<double> resolution(record.known.size(), params.initial_resolution);
  double max_span = 0.0;
  for (std::size_t i = 0; i < width.size(); ++i)
    max_span = std::max(max_span, marginals[i + 1].span());
  int max_widenings =
      width.empty()
          ? 1
          : static_cast<int>(std::ceil(
                (max_span / *std::min_element(width.begin(), width.end())) /
                params.resolution_increment)) +
                2;

  for (int round = 0; round <= max_widenings; ++round) {
    double total = 0.0;
    std::size_t hits = 0;
    for (std::size_t r = 0; r < pool.m(); ++r) {
      if (pool.labels[r] != record.label) continue;
      const double* row =
          pool.inputs.data() + r * static_cast<std::size_t>(pool.input_dim);
      bool ok = true;
      for (std::size_t i = 0; i < record.known.size(); ++i) {
        if (std::abs(record.known[i] - row[i + 1]) > resolution[i] * width[i]) {
          ok = false;
          break;
        }
      }
      if (ok) {
        total += row[0];
        ++hits;
      }
    }
    if (hits > 0) return total / static_cast<double>(hits);
    for (double& m : resolution) m += params.resolution_increment;
  }
  throw NoMatchingLabel("widening loop failed to find a match");
}

double ci_aia(const Dataset& pool, const std::vector<Marginal>& marginals,
              const PartialRecord& record, const AiaParams& params) {
  return match_and_average(pool, marginals, record, params);
}

namespace {

double query_label(const Model& model, std::vector<double>& probe) {
  return confidence(model, probe) >= 0.5 ? 1.0 : 0.0;
}

}  // namespace

double fredrikson_aia(const Model& model, const PartialRecord& record,
                      const Marginal& f1,
                      const std::array<std::array<double, 2>, 2>& confusion,
                      int g, RngStream& rng) {
  double lo = f1.kind == Marginal::Kind::kStandardNormal
                  ? -0.5 * f1.span()
                  : f1.edges.front();
  double step = f1.span() / g;
  std::vector<double> probe(record.known.size() + 1);
  std::copy(record.known.begin(), record.known.end(), probe.begin() + 1);

  double best_score = -1.0;
  double best_value = lo;
  for (int i = 0; i < g; ++i) {
    double left = lo + i * step;
    double value = left + rng.uniform() * step;
    probe[0] = value;
    double mass = cdf(f1, left + step) - cdf(f1, left);
    int predicted = static_cast<int>(query_label(model, probe));
    double score =
        mass *
        confusion[static_cast<std::size_t>(predicted)][record.label != 0 ? 1 : 0];
    if (score > best_score) {
      best_score = score;
      best_value = value;
    }
  }
  return best_value;
}

double csmia_aia(const Model& model, const PartialRecord& record,
                 const Marginal& f1, int g, RngStream& rng) {
  double lo = f1.kind == Marginal::Kind::kStandardNormal
                  ? -0.5 * f1.span()
                  : f1.edges.front();
  double step = f1.span() / g;
  std::vector<double> probe(record.known.size() + 1);
  std::copy(record.known.begin(), record.known.end(), probe.begin() + 1);

  int match_count = 0;
  double best_match_conf = -1.0, best_match_value = lo;
  double worst_nonmatch_conf = std::numeric_limits<double>::infinity();
  double worst_nonmatch_value = lo;
  for (int i = 0; i < g; ++i) {
    double value = lo + i * step + rng.uniform() * step;
    probe[0] = value;
    double c = confidence(model, probe);
    int predicted = c >= 0.5 ? 1 : 0;
    double conf = predicted == 1 ? c : 1.0 - c;
    if (predicted == (record.label != 0 ? 1 : 0)) {
      ++match_count;
      if (conf > best_match_conf) {
        best_match_conf = conf;
        best_match_value = value;
      }
    } else if (conf < worst_nonmatch_conf) {
      worst_nonmatch_conf = conf;
      worst_nonmatch_value = value;
    }
  }
  return match_count > 0 ? best_match_value : worst_nonmatch_value;
}

double marginal_prior(const Marginal& f1, RngStream& rng) {
  double u;
  do {
    u = rng.uniform();
  } while (u <= 0.0);
  return inverse_cdf(f1, u);
}

std::array<double, 2> tertile_edges(const Marginal& f1) {
  return {inverse_cdf(f1, 1.0 / 3.0), inverse_cdf(f1, 2.0 / 3.0)};
}

int tertile_bin(double v, const std::array<double, 2>& edges) {
  if (v < edges[0]) return 0;
  if (v < edges[1]) return 1;
  return 2;
}

}  // namespace corrleak
