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

#include <cmath>
#include <vector>

#include "corrleak/copula.hpp"
#include "corrleak/corrmat.hpp"
#include "test_util.hpp"

using namespace corrleak;

namespace {

Marginal uniform01(int g = 100) {
  std::vector<double> edges(static_cast<std::size_t>(g) + 1);
  for (int i = 0; i <= g; ++i) edges[static_cast<std::size_t>(i)] = double(i) / g;
  return Marginal::empirical(edges, std::vector<double>(static_cast<std::size_t>(g),
                                                        1.0 / g));
}

// Oracle: invert the standard normal CDF by bisection on erfc. The upper
// tail goes through the complement so no cancellation happens near u = 1.
double quantile_by_bisection(double u) {
  if (u > 0.5) {
    // Solve 0.5 * erfc(x / sqrt2) = 1 - u for x, i.e. the upper tail mass.
    double target = 1.0 - u;
    double lo = 0.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
      double mid = 0.5 * (lo + hi);
      if (0.5 * std::erfc(mid / std::numbers::sqrt2) > target) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  }
  double lo = -40.0, hi = 0.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(-mid / std::numbers::sqrt2) < u) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("standard normal quantile matches the bisection oracle") {
  CHECK(inverse_cdf(Marginal::standard_normal(), 0.5) == doctest::Approx(0.0));
  CHECK(inverse_cdf(Marginal::standard_normal(), 0.975) ==
        doctest::Approx(quantile_by_bisection(0.975)).epsilon(1e-9));
  CHECK(inverse_cdf(Marginal::standard_normal(), 0.975) ==
        doctest::Approx(1.959963984540054).epsilon(1e-9));
  for (double u : {1e-12, 1e-6, 0.01, 0.2, 0.7, 0.99, 1.0 - 1e-9}) {
    CHECK(std_normal_quantile(u) ==
          doctest::Approx(quantile_by_bisection(u)).epsilon(1e-9));
  }
  CHECK_THROWS_AS(inverse_cdf(Marginal::standard_normal(), 0.0), DomainError);
  CHECK_THROWS_AS(inverse_cdf(Marginal::standard_normal(), 1.0), DomainError);
  CHECK_THROWS_AS(inverse_cdf(Marginal::standard_normal(), -0.5), DomainError);
}

TEST_CASE("empirical inverse cdf interpolates within sub-intervals") {
  Marginal uni = uniform01(4);
  CHECK(inverse_cdf(uni, 0.625) == doctest::Approx(0.625).epsilon(1e-12));
  CHECK(inverse_cdf(uni, 0.1) == doctest::Approx(0.1).epsilon(1e-12));

  // Zero-mass bins are skipped.
  Marginal gap = Marginal::empirical({0.0, 1.0, 2.0, 3.0}, {0.5, 0.0, 0.5});
  CHECK(inverse_cdf(gap, 0.25) == doctest::Approx(0.5));
  CHECK(inverse_cdf(gap, 0.75) == doctest::Approx(2.5));
}

TEST_CASE("marginal validation and serialization") {
  CHECK_THROWS_AS(Marginal::empirical({0.0, 1.0}, {0.5, 0.5}), DomainError);
  CHECK_THROWS_AS(Marginal::empirical({0.0, 0.0, 1.0}, {0.5, 0.5}), DomainError);
  CHECK_THROWS_AS(Marginal::empirical({0.0, 0.5, 1.0}, {0.9, 0.2}), DomainError);

  Marginal m = uniform01(10);
  Marginal back = Marginal::from_json(m.to_json());
  CHECK(back.kind == Marginal::Kind::kEmpirical);
  CHECK(back.edges == m.edges);
  CHECK(back.masses == m.masses);
  Marginal sn = Marginal::from_json(Marginal::standard_normal().to_json());
  CHECK(sn.kind == Marginal::Kind::kStandardNormal);
}

TEST_CASE("fit_marginal recovers simple shapes") {
  RngStream rng(40);

  // Near-constant data lands in one dominant bin.
  std::vector<double> spiky(500, 1.0);
  spiky.push_back(1.001);
  Marginal m = fit_marginal(spiky, 10);
  CHECK(*std::max_element(m.masses.begin(), m.masses.end()) > 0.99);

  std::vector<double> constant(100, 2.0);
  CHECK_THROWS_AS(fit_marginal(constant, 10), DegenerateSupport);

  // Uniform(0,1) samples: every mass near 1/G.
  std::vector<double> uni(100000);
  for (double& x : uni) x = rng.uniform();
  Marginal mu = fit_marginal(uni, 100);
  for (double w : mu.masses) CHECK(w == doctest::Approx(0.01).epsilon(0.5));

  // Standard normal samples: fitted median near 0.
  std::vector<double> normal(100000);
  for (double& x : normal) x = rng.normal();
  Marginal mn = fit_marginal(normal, 100);
  CHECK(std::abs(inverse_cdf(mn, 0.5)) < 0.05);
}

TEST_CASE("copula with identity matrix gives independent columns") {
  RngStream rng(41);
  std::vector<Marginal> normals(3, Marginal::standard_normal());
  Dataset d = sample_copula(CorrMatrix::identity(3), normals, 100000,
                            ThresholdRule::kZero, rng);
  CorrMatrix emp = empirical_corr(d);
  CHECK(std::abs(emp.at(0, 1)) < 0.02);
  // The label column is binarized, so only the input pair is near zero by
  // the strict identity argument; the input-label entries stay small too.
  CHECK(std::abs(emp.at(0, 2)) < 0.02);
  CHECK(std::abs(emp.at(1, 2)) < 0.02);
}

TEST_CASE("copula reproduces the parameter for standard normal marginals") {
  RngStream rng(42);
  CorrMatrix c(3);
  c.set(0, 1, 0.7);
  std::vector<Marginal> normals(3, Marginal::standard_normal());
  Dataset d = sample_copula(c, normals, 100000, ThresholdRule::kZero, rng);
  CorrMatrix emp = empirical_corr(d);
  CHECK(emp.at(0, 1) == doctest::Approx(0.7).epsilon(0.015));
}

TEST_CASE("non-normal marginals attenuate the realized correlation") {
  RngStream rng(43);
  CorrMatrix c(3);
  c.set(0, 1, 0.7);
  std::vector<Marginal> marginals = {uniform01(), uniform01(),
                                     Marginal::standard_normal()};
  Dataset d = sample_copula(c, marginals, 100000, ThresholdRule::kZero, rng);
  CorrMatrix emp = empirical_corr(d);
  CHECK(emp.at(0, 1) < 0.7);
  CHECK(emp.at(0, 1) > 0.6);  // (6/pi) asin(rho/2) ~ 0.684 for rho = 0.7
}

TEST_CASE("copula marginal fidelity by KS") {
  RngStream rng(44);
  CorrMatrix c(2);
  c.set(0, 1, 0.5);
  std::vector<Marginal> marginals = {uniform01(), Marginal::standard_normal()};
  Dataset d = sample_copula(c, marginals, 100000, ThresholdRule::kZero, rng);
  std::vector<double> col(d.m());
  for (std::size_t r = 0; r < d.m(); ++r) col[r] = d.inputs[r];
  double ks = testutil::ks_statistic(
      col, [&](double x) { return cdf(marginals[0], x); });
  CHECK(ks < 0.01);
}

TEST_CASE("copula is deterministic and validates its input") {
  RngStream a(45), b(45);
  CorrMatrix c(3);
  c.set(0, 1, 0.4);
  std::vector<Marginal> normals(3, Marginal::standard_normal());
  Dataset da = sample_copula(c, normals, 500, ThresholdRule::kZero, a);
  Dataset db = sample_copula(c, normals, 500, ThresholdRule::kZero, b);
  CHECK(da.inputs == db.inputs);
  CHECK(da.labels == db.labels);

  CorrMatrix bad(3);
  bad.set(0, 1, 0.9);
  bad.set(0, 2, 0.9);
  bad.set(1, 2, -0.9);
  CHECK_THROWS_AS(
      sample_copula(bad, normals, 10, ThresholdRule::kZero, a), InvalidMatrix);
}

TEST_CASE("median and mean threshold rules balance or shift labels") {
  RngStream rng(46);
  CorrMatrix c(2);
  c.set(0, 1, 0.3);
  std::vector<Marginal> marginals = {Marginal::standard_normal(), uniform01()};
  Dataset d = sample_copula(c, marginals, 10001, ThresholdRule::kMedian, rng);
  std::size_t ones = 0;
  for (auto y : d.labels) ones += y;
  CHECK(ones == 5000);  // strictly above the median of an odd-size sample
}

TEST_CASE("empirical_corr edge cases") {
  Dataset d;
  d.input_dim = 2;
  for (int r = 0; r < 100; ++r) {
    double x = r * 0.01;
    d.inputs.push_back(x);
    d.inputs.push_back(-x);
    d.labels.push_back(r % 2);
  }
  CorrMatrix emp = empirical_corr(d);
  CHECK(emp.at(0, 1) == doctest::Approx(-1.0).epsilon(1e-12));

  Dataset twin;
  twin.input_dim = 2;
  for (int r = 0; r < 50; ++r) {
    double x = std::sin(r * 1.7);
    twin.inputs.push_back(x);
    twin.inputs.push_back(x);
    twin.labels.push_back(r % 2);
  }
  CHECK(empirical_corr(twin).at(0, 1) == doctest::Approx(1.0).epsilon(1e-12));

  Dataset flat;
  flat.input_dim = 1;
  for (int r = 0; r < 10; ++r) {
    flat.inputs.push_back(1.0);
    flat.labels.push_back(r % 2);
  }
  CHECK_THROWS_WITH_AS(empirical_corr(flat),
                       doctest::Contains("column 0"), ZeroVariance);
}

TEST_CASE("dataset CSV round-trip") {
  RngStream rng(47);
  CorrMatrix c(3);
  c.set(0, 1, 0.2);
  std::vector<Marginal> normals(3, Marginal::standard_normal());
  Dataset d = sample_copula(c, normals, 50, ThresholdRule::kZero, rng);
  Dataset back = Dataset::from_csv(d.to_csv());
  CHECK(back.inputs == d.inputs);
  CHECK(back.labels == d.labels);
}

TEST_CASE("shift_constraints is a no-op for all-normal marginals without labels") {
  // With standard normal marginals the copula is exact for the inputs, but
  // the binarized label still attenuates the input-output entries, so the
  // shift must move the constraints upward.
  RngStream rng(48);
  std::vector<Marginal> normals(3, Marginal::standard_normal());
  ShiftParams params;
  params.shadow_count = 50;
  params.dataset_size = 2000;
  params.threshold = ThresholdRule::kZero;
  ShiftResult r = shift_constraints({0.5, 0.5}, normals, params, rng);
  CHECK(r.gap < 0.03);
  CHECK(r.shifted[0] > 0.5);  // compensates the point-biserial attenuation
  CHECK(r.shifted[1] > 0.5);
}

TEST_CASE("shift_constraints compensates uniform-marginal attenuation") {
  RngStream rng(49);
  std::vector<Marginal> marginals = {uniform01(), Marginal::standard_normal()};
  ShiftParams params;
  params.shadow_count = 60;
  params.dataset_size = 2000;
  params.threshold = ThresholdRule::kZero;
  ShiftResult r = shift_constraints({0.7}, marginals, params, rng);
  CHECK(r.shifted[0] > 0.7);
  CHECK(r.shifted[0] <= 1.0);
  CHECK(r.gap < 0.05);
}

TEST_CASE("shift_constraints stays in range and is deterministic") {
  RngStream a(50), b(50);
  std::vector<Marginal> marginals = {uniform01(), uniform01(),
                                     Marginal::standard_normal()};
  ShiftParams params;
  params.shadow_count = 30;
  params.dataset_size = 500;
  ShiftResult ra = shift_constraints({0.95, -0.95}, marginals, params, a);
  ShiftResult rb = shift_constraints({0.95, -0.95}, marginals, params, b);
  CHECK(ra.shifted == rb.shifted);
  for (double v : ra.shifted) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }
}
