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

#ifndef CORRLEAK_CORRMAT_HPP
#define CORRLEAK_CORRMAT_HPP

#include <optional>
#include <string>
#include <vector>

#include "corrleak/errors.hpp"
#include "corrleak/rng.hpp"

namespace corrleak {

// Square matrix of pairwise Pearson coefficients. A valid instance has all
// entries in [-1, 1], a unit diagonal, symmetry, and no eigenvalue below
// -tolerance. Construction starts from the identity; callers fill the
// off-diagonal entries through set().
class CorrMatrix {
 public:
  explicit CorrMatrix(int n);
  static CorrMatrix identity(int n) { return CorrMatrix(n); }

  int size() const { return n_; }
  double at(int i, int j) const { return e_[static_cast<std::size_t>(i) * n_ + j]; }
  // Sets (i, j) and (j, i).
  void set(int i, int j, double v);

  const std::vector<double>& data() const { return e_; }
  std::vector<double>& data() { return e_; }

  // Row-major CSV block / JSON object {"n":..., "entries":[[...]]}, both
  // with 17 significant digits so round-trips are exact.
  std::string to_csv() const;
  static CorrMatrix from_csv(const std::string& text);
  std::string to_json() const;
  static CorrMatrix from_json(const std::string& text);

 private:
  int n_;
  std::vector<double> e_;
};

// Lower-triangular factor with unit-norm rows; C = B * B^T.
struct CholeskyFactor {
  int n = 0;
  std::vector<double> entries;  // row-major n*n, strict upper part zero

  double at(int i, int j) const {
    return entries[static_cast<std::size_t>(i) * n + j];
  }
  double& at(int i, int j) { return entries[static_cast<std::size_t>(i) * n + j]; }
};

bool is_valid(const CorrMatrix& c, double tol = 1e-8);

// Eigenvalues of the symmetric matrix, ascending (cyclic Jacobi).
std::vector<double> sym_eigenvalues(const CorrMatrix& c);

// Throws NotPositiveSemiDefinite if a pivot falls below -1e-8; pivots in
// [-1e-8, 0] are clamped to zero and the dependent column entries set to 0.
CholeskyFactor cholesky(const CorrMatrix& c);

CorrMatrix reconstruct(const CholeskyFactor& b);

// Feasible range, center m and half-width l, for the matrix entry (i, j)
// (0-based, i > j) given a partially built factor: rows 0..i-1 final, row i
// final through column j-1 with entries from column j on holding the running
// sine product. Any value in [m - l, m + l] admits a PSD completion.
struct CoefficientBounds {
  double m = 0.0;
  double l = 0.0;
  double lo() const { return m - l; }
  double hi() const { return m + l; }
};

CoefficientBounds coefficient_bounds(const CholeskyFactor& partial, int i, int j);

// perm[new_index] = old_index; applies to rows then columns.
CorrMatrix reorder(const CorrMatrix& c, const std::vector<int>& perm);
std::vector<int> invert_permutation(const std::vector<int>& perm);

// Unconstrained sampler: first column uniform on [-1, 1], every later
// coefficient uniform within its feasible bounds, in row-major order.
CorrMatrix sample_corr_matrix(int n, RngStream& rng);

// Constrained samplers. Variables are ordered X_1..X_{n-1}, Y in the output;
// entry (0, 1) is the target pair, generated first so its prior is uniform
// within the feasible interval.
CorrMatrix sample_s1(int n, double rho1, double rho2, RngStream& rng);
CorrMatrix sample_s2(int n, const std::vector<double>& v, RngStream& rng);
// `known` has every entry filled except (0, 1)/(1, 0). Throws
// InfeasibleConstraints when the known entries admit no PSD completion.
CorrMatrix sample_s3(const CorrMatrix& known, RngStream& rng);

enum class ScenarioKind { kS1, kS2, kS3 };

// Attacker knowledge: which correlations are fixed during shadow sampling.
struct Scenario {
  ScenarioKind kind = ScenarioKind::kS2;
  double rho1 = 0.0;              // S1
  double rho2 = 0.0;              // S1
  std::vector<double> v;          // S2: (rho(X_i, Y))_{i=1..n-1}
  std::optional<CorrMatrix> known;  // S3: all entries but (0, 1)

  static Scenario s1(double rho1, double rho2);
  static Scenario s2(std::vector<double> v);
  static Scenario s3(CorrMatrix known);

  void validate(int n) const;
  CorrMatrix sample(int n, RngStream& rng) const;
  // The input-output constraint vector when one is defined (S2 always, S3
  // from its last column, S1 only entries 0 and 1).
  std::vector<double> output_constraints(int n) const;
};

const char* scenario_name(ScenarioKind kind);

}  // namespace corrleak

#endif  // CORRLEAK_CORRMAT_HPP
