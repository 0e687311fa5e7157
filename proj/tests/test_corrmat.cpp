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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "corrleak/corrmat.hpp"
#include "corrleak/rng.hpp"
#include "test_util.hpp"

using namespace corrleak;

namespace {

// Independent oracle: eigenvalues of a symmetric 3x3 via the closed-form
// characteristic polynomial (trigonometric solution).
std::vector<double> eig3_charpoly(const CorrMatrix& c) {
  double a = c.at(0, 0), b = c.at(1, 1), d = c.at(2, 2);
  double e = c.at(0, 1), f = c.at(0, 2), g = c.at(1, 2);
  double p1 = e * e + f * f + g * g;
  double q = (a + b + d) / 3.0;
  double p2 = (a - q) * (a - q) + (b - q) * (b - q) + (d - q) * (d - q) + 2.0 * p1;
  double p = std::sqrt(p2 / 6.0);
  if (p < 1e-15) return {q, q, q};
  // B = (C - qI) / p; r = det(B) / 2
  auto bb = [&](int i, int j) { return (c.at(i, j) - (i == j ? q : 0.0)) / p; };
  double det = bb(0, 0) * (bb(1, 1) * bb(2, 2) - bb(1, 2) * bb(2, 1)) -
               bb(0, 1) * (bb(1, 0) * bb(2, 2) - bb(1, 2) * bb(2, 0)) +
               bb(0, 2) * (bb(1, 0) * bb(2, 1) - bb(1, 1) * bb(2, 0));
  double r = std::clamp(det / 2.0, -1.0, 1.0);
  double phi = std::acos(r) / 3.0;
  double l1 = q + 2.0 * p * std::cos(phi);
  double l3 = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
  double l2 = 3.0 * q - l1 - l3;
  std::vector<double> out = {l1, l2, l3};
  std::sort(out.begin(), out.end());
  return out;
}

// Independent PSD test for the feasibility-scan oracles: Gershgorin-free,
// pivoted Gaussian elimination on the symmetric matrix.
bool psd_by_elimination(CorrMatrix c, double tol = 1e-8) {
  int n = c.size();
  std::vector<double> a = c.data();
  auto at = [&](int i, int j) -> double& {
    return a[static_cast<std::size_t>(i) * n + j];
  };
  for (int k = 0; k < n; ++k) {
    double pivot = at(k, k);
    if (pivot < -tol) return false;
    if (pivot <= tol) {
      // A PSD matrix with a (near-)zero pivot must have a (near-)zero row.
      for (int j = k + 1; j < n; ++j)
        if (std::abs(at(k, j)) > 1e-6) return false;
      continue;
    }
    for (int i = k + 1; i < n; ++i) {
      double factor = at(i, k) / pivot;
      for (int j = k; j < n; ++j) at(i, j) -= factor * at(k, j);
    }
  }
  return true;
}

CorrMatrix all_off_diag(int n, double v) {
  CorrMatrix c(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) c.set(i, j, v);
  return c;
}

}  // namespace

TEST_CASE("is_valid on the named examples") {
  CHECK(is_valid(CorrMatrix::identity(3)));

  CorrMatrix bad(2);
  bad.set(0, 1, 1.5);
  CHECK_FALSE(is_valid(bad));

  // All off-diagonals -0.9: the characteristic-polynomial oracle finds a
  // negative eigenvalue, so validity must fail.
  CorrMatrix neg = all_off_diag(3, -0.9);
  auto oracle = eig3_charpoly(neg);
  CHECK(oracle.front() < -1e-8);
  CHECK_FALSE(is_valid(neg));

  // Jacobi eigenvalues agree with the oracle on random symmetric matrices.
  RngStream rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    CorrMatrix c = sample_corr_matrix(3, rng);
    auto jac = sym_eigenvalues(c);
    auto ref = eig3_charpoly(c);
    for (int i = 0; i < 3; ++i) CHECK(jac[i] == doctest::Approx(ref[i]).epsilon(1e-9));
  }
}

TEST_CASE("cholesky reproduces the matrix and clamps rank deficiency") {
  CholeskyFactor id = cholesky(CorrMatrix::identity(4));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(id.at(i, j) == doctest::Approx(i == j ? 1.0 : 0.0));

  CorrMatrix two(2);
  two.set(1, 0, 0.6);
  CholeskyFactor b = cholesky(two);
  CHECK(b.at(1, 0) == doctest::Approx(0.6));
  CHECK(b.at(1, 1) == doctest::Approx(0.8));

  RngStream rng(22);
  CorrMatrix c = sample_corr_matrix(5, rng);
  CorrMatrix back = reconstruct(cholesky(c));
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      CHECK(std::abs(back.at(i, j) - c.at(i, j)) < 1e-9);

  // Perfectly correlated pair: rank deficient but still factorizable.
  CorrMatrix deficient = all_off_diag(3, 1.0);
  CholeskyFactor bd = cholesky(deficient);
  CorrMatrix back2 = reconstruct(bd);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(std::abs(back2.at(i, j) - deficient.at(i, j)) < 1e-9);

  CorrMatrix invalid = all_off_diag(3, -0.9);
  CHECK_THROWS_AS(cholesky(invalid), NotPositiveSemiDefinite);
}

TEST_CASE("cholesky factor rows have unit norm") {
  RngStream rng(23);
  for (int n : {2, 4, 7}) {
    CorrMatrix c = sample_corr_matrix(n, rng);
    CholeskyFactor b = cholesky(c);
    for (int i = 0; i < n; ++i) {
      double norm = 0.0;
      for (int j = 0; j <= i; ++j) norm += b.at(i, j) * b.at(i, j);
      CHECK(norm == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(b.at(i, i) >= 0.0);
      for (int j = i + 1; j < n; ++j) CHECK(b.at(i, j) == 0.0);
    }
  }
}

TEST_CASE("coefficient_bounds examples") {
  // First sampled coefficient: no prior constraints, bounds [-1, 1].
  CholeskyFactor b;
  b.n = 2;
  b.entries = {1.0, 0.0, 1.0, 1.0};  // row 1 running product = 1
  auto first = coefficient_bounds(b, 1, 0);
  CHECK(first.m == doctest::Approx(0.0));
  CHECK(first.l == doctest::Approx(1.0));

  // n=3 with first-column entries 0.5, 0.5: bounds for the (2,1) entry.
  CholeskyFactor b3;
  b3.n = 3;
  b3.entries.assign(9, 0.0);
  b3.at(0, 0) = 1.0;
  b3.at(1, 0) = 0.5;
  b3.at(1, 1) = std::sqrt(0.75);
  b3.at(2, 0) = 0.5;
  b3.at(2, 1) = std::sqrt(0.75);  // running sine product
  b3.at(2, 2) = std::sqrt(0.75);
  auto bounds = coefficient_bounds(b3, 2, 1);
  CHECK(bounds.lo() == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(bounds.hi() == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(coefficient_bounds(b3, 1, 1), IndexOrder);
  CHECK_THROWS_AS(coefficient_bounds(b3, 0, 2), IndexOrder);
}

TEST_CASE("every value inside coefficient bounds admits a PSD completion") {
  // Scan oracle over a partial 6x6: values in [m-l, m+l] complete to valid
  // matrices, values outside fail the elimination PSD test.
  RngStream rng(24);
  int n = 6;
  for (int trial = 0; trial < 5; ++trial) {
    CorrMatrix base = sample_corr_matrix(n, rng);
    // Recompute the bounds of the last generated coefficient (n-1, n-2)
    // given everything else, by reverse engineering the factor.
    CorrMatrix known = base;
    Scenario s3 = Scenario::s3(known);
    // Brute-force scan the (0, 1) entry of the S3 form: delete it first.
    CorrMatrix probe = base;
    double lo_scan = 2.0, hi_scan = -2.0;
    for (int step = -1000; step <= 1000; ++step) {
      double v = step / 1000.0;
      probe.set(0, 1, v);
      if (psd_by_elimination(probe)) {
        lo_scan = std::min(lo_scan, v);
        hi_scan = std::max(hi_scan, v);
      }
    }
    // Sampled values must stay inside the scanned feasible range.
    for (int k = 0; k < 100; ++k) {
      RngStream child = rng.child(static_cast<std::uint64_t>(k));
      CorrMatrix completed = sample_s3(base, child);
      CHECK(completed.at(0, 1) >= lo_scan - 5e-3);
      CHECK(completed.at(0, 1) <= hi_scan + 5e-3);
      CHECK(is_valid(completed));
    }
  }
}

TEST_CASE("sample_corr_matrix validity and first-column uniformity") {
  RngStream rng(25);
  // n=2: the single off-diagonal entry is uniform on [-1, 1].
  std::vector<double> draws;
  for (int k = 0; k < 10000; ++k)
    draws.push_back(sample_corr_matrix(2, rng).at(0, 1));
  double ks = testutil::ks_statistic(
      draws, [](double x) { return (x + 1.0) / 2.0; });
  CHECK(ks < 0.02);

  for (int n : {2, 3, 4, 5, 6, 7, 8, 9, 10}) {
    for (int k = 0; k < 2000; ++k) {
      CorrMatrix c = sample_corr_matrix(n, rng);
      REQUIRE(is_valid(c));
    }
  }

  // n=4: the (1, 0) entry is an (unconstrained) first-column seed.
  draws.clear();
  for (int k = 0; k < 10000; ++k)
    draws.push_back(sample_corr_matrix(4, rng).at(1, 0));
  ks = testutil::ks_statistic(draws, [](double x) { return (x + 1.0) / 2.0; });
  CHECK(ks < 0.02);
}

TEST_CASE("sample_s1 pins both constraints and spans the closed-form interval") {
  RngStream rng(26);

  // Collapsed interval.
  CorrMatrix forced = sample_s1(3, 1.0, 1.0, rng);
  CHECK(forced.at(0, 1) == doctest::Approx(1.0).epsilon(1e-9));

  // Exactness of the seeded entries.
  CorrMatrix c4 = sample_s1(4, 0.3, -0.7, rng);
  CHECK(c4.at(0, 3) == 0.3);
  CHECK(c4.at(1, 3) == -0.7);
  CHECK(is_valid(c4));

  // Target uniform on [cos(t1+t2), cos(t1-t2)] = [-0.5, 1] for (0.5, 0.5).
  std::vector<double> draws;
  for (int k = 0; k < 10000; ++k)
    draws.push_back(sample_s1(3, 0.5, 0.5, rng).at(0, 1));
  CHECK(*std::min_element(draws.begin(), draws.end()) > -0.5 - 1e-9);
  CHECK(*std::max_element(draws.begin(), draws.end()) < 1.0 + 1e-9);
  double ks = testutil::ks_statistic(
      draws, [](double x) { return (x + 0.5) / 1.5; });
  CHECK(ks < 0.02);
}

TEST_CASE("sample_s2 pins the whole constraint column") {
  RngStream rng(27);

  // All-zero constraints leave the target uniform on [-1, 1].
  std::vector<double> draws;
  for (int k = 0; k < 10000; ++k) {
    CorrMatrix c = sample_s2(4, {0.0, 0.0, 0.0}, rng);
    for (int i = 0; i < 3; ++i) CHECK(c.at(i, 3) == 0.0);
    draws.push_back(c.at(0, 1));
  }
  double ks = testutil::ks_statistic(
      draws, [](double x) { return (x + 1.0) / 2.0; });
  CHECK(ks < 0.02);

  // Strong constraints push the target toward the top of its range; the
  // sampled extremes converge to the feasible endpoints.
  std::vector<double> v = {0.9, 0.9, 0.1, 0.1, 0.1};
  double lo = 2.0, hi = -2.0;
  for (int k = 0; k < 5000; ++k) {
    CorrMatrix c = sample_s2(6, v, rng);
    REQUIRE(is_valid(c));
    for (int i = 0; i < 5; ++i)
      CHECK(c.at(i, 5) == v[static_cast<std::size_t>(i)]);
    lo = std::min(lo, c.at(0, 1));
    hi = std::max(hi, c.at(0, 1));
  }
  // Bounds for the first generated coefficient: m = 0.81, l = 1 - 0.81.
  CHECK(lo == doctest::Approx(0.62).epsilon(0.04));
  CHECK(hi == doctest::Approx(1.0).epsilon(0.04));
}

TEST_CASE("for n=3 the S1 and S2 samplers agree in law") {
  RngStream rng_a(28);
  RngStream rng_b(29);
  std::vector<double> a, b;
  for (int k = 0; k < 5000; ++k) {
    a.push_back(sample_s1(3, 0.5, 0.5, rng_a).at(0, 1));
    b.push_back(sample_s2(3, {0.5, 0.5}, rng_b).at(0, 1));
  }
  CHECK(testutil::ks_two_sample(a, b) < 0.04);
}

TEST_CASE("sample_s3 matches the closed form and the scan oracle") {
  RngStream rng(30);

  // Unconstrained case: target uniform on [-1, 1].
  CorrMatrix free3(3);
  std::vector<double> draws;
  for (int k = 0; k < 10000; ++k)
    draws.push_back(sample_s3(free3, rng).at(0, 1));
  double ks = testutil::ks_statistic(
      draws, [](double x) { return (x + 1.0) / 2.0; });
  CHECK(ks < 0.02);

  // (0.8, 0.8) closed form: [2*0.64 - 1, 1] = [0.28, 1].
  CorrMatrix known(3);
  known.set(0, 2, 0.8);
  known.set(1, 2, 0.8);
  double lo = 2.0, hi = -2.0;
  for (int k = 0; k < 10000; ++k) {
    CorrMatrix c = sample_s3(known, rng);
    CHECK(c.at(0, 2) == 0.8);
    CHECK(c.at(1, 2) == 0.8);
    lo = std::min(lo, c.at(0, 1));
    hi = std::max(hi, c.at(0, 1));
  }
  CHECK(lo == doctest::Approx(0.28).epsilon(0.02));
  CHECK(hi == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::cos(2.0 * std::acos(0.8)) == doctest::Approx(0.28).epsilon(1e-12));

  // n=4 oracle: endpoints of the sampled interval against a PSD scan.
  for (int trial = 0; trial < 10; ++trial) {
    RngStream t = rng.child(static_cast<std::uint64_t>(trial));
    CorrMatrix base = sample_corr_matrix(4, t);
    double lo_scan = 2.0, hi_scan = -2.0;
    CorrMatrix probe = base;
    for (int step = -1000; step <= 1000; ++step) {
      double v = step / 1000.0;
      probe.set(0, 1, v);
      if (psd_by_elimination(probe)) {
        lo_scan = std::min(lo_scan, v);
        hi_scan = std::max(hi_scan, v);
      }
    }
    double lo_draw = 2.0, hi_draw = -2.0;
    for (int k = 0; k < 5000; ++k) {
      double v = sample_s3(base, t).at(0, 1);
      lo_draw = std::min(lo_draw, v);
      hi_draw = std::max(hi_draw, v);
    }
    CHECK(std::abs(lo_draw - lo_scan) < 0.005);
    CHECK(std::abs(hi_draw - hi_scan) < 0.005);
  }

  // Infeasible known entries: X1 == X3 == Y forces rho(X2, .) consistency.
  CorrMatrix impossible(3);
  impossible.set(0, 2, 1.0);
  impossible.set(1, 2, 0.9);
  // (X1 identical to Y) and rho(X2,Y)=0.9 is fine; the unknown is forced.
  CorrMatrix forced = sample_s3(impossible, rng);
  CHECK(forced.at(0, 1) == doctest::Approx(0.9).epsilon(1e-9));

  CorrMatrix contradictory(4);
  contradictory.set(0, 3, 1.0);
  contradictory.set(1, 3, 0.5);
  contradictory.set(2, 3, 1.0);
  contradictory.set(0, 2, -1.0);  // X1 == Y and X3 == Y but rho(X1,X3) = -1
  CHECK_THROWS_AS(sample_s3(contradictory, rng), InfeasibleConstraints);
}

TEST_CASE("samplers are deterministic under a fixed stream") {
  RngStream a(31), b(31);
  CorrMatrix ca = sample_s2(5, {0.2, -0.3, 0.4, 0.0}, a);
  CorrMatrix cb = sample_s2(5, {0.2, -0.3, 0.4, 0.0}, b);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) CHECK(ca.at(i, j) == cb.at(i, j));
}

TEST_CASE("serialization round-trips exactly") {
  RngStream rng(32);
  CorrMatrix c = sample_corr_matrix(4, rng);
  CorrMatrix via_csv = CorrMatrix::from_csv(c.to_csv());
  CorrMatrix via_json = CorrMatrix::from_json(c.to_json());
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      CHECK(via_csv.at(i, j) == c.at(i, j));
      CHECK(via_json.at(i, j) == c.at(i, j));
    }
  CHECK_THROWS_AS(CorrMatrix::from_csv("1,0\nnope,1\n"), ParseError);
}

TEST_CASE("reorder and permutation inversion") {
  RngStream rng(33);
  CorrMatrix c = sample_corr_matrix(5, rng);
  std::vector<int> perm = {3, 1, 4, 0, 2};
  CorrMatrix moved = reorder(c, perm);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      CHECK(moved.at(i, j) == c.at(perm[static_cast<std::size_t>(i)],
                                   perm[static_cast<std::size_t>(j)]));
  CorrMatrix back = reorder(moved, invert_permutation(perm));
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) CHECK(back.at(i, j) == c.at(i, j));
}
