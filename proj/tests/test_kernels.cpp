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

#include "corrleak/kernels.hpp"
#include "corrleak/rng.hpp"

using namespace corrleak;

namespace {

std::vector<double> random_vec(std::size_t n, RngStream& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-2.0, 2.0);
  return v;
}

const std::size_t kLengths[] = {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 33, 1000, 4097};

}  // namespace

#if defined(__x86_64__)

TEST_CASE("scalar and avx2 reductions agree within rounding") {
  if (!kernels::avx2_supported()) return;
  RngStream rng(7);
  for (std::size_t n : kLengths) {
    auto a = random_vec(n, rng);
    auto b = random_vec(n, rng);
    double tol = 1e-13 * (1.0 + static_cast<double>(n));
    CHECK(kernels::scalar::dot(a.data(), b.data(), n) ==
          doctest::Approx(kernels::avx2::dot(a.data(), b.data(), n)).epsilon(tol));
    CHECK(kernels::scalar::sum(a.data(), n) ==
          doctest::Approx(kernels::avx2::sum(a.data(), n)).epsilon(tol));
    CHECK(kernels::scalar::sum_sq(a.data(), n) ==
          doctest::Approx(kernels::avx2::sum_sq(a.data(), n)).epsilon(tol));
  }
}

TEST_CASE("axpy is bit-identical across backends") {
  if (!kernels::avx2_supported()) return;
  RngStream rng(8);
  for (std::size_t n : kLengths) {
    auto x = random_vec(n, rng);
    auto y0 = random_vec(n, rng);
    auto y1 = y0;
    kernels::scalar::axpy(1.7, x.data(), y0.data(), n);
    kernels::avx2::axpy(1.7, x.data(), y1.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(y0[i] == y1[i]);
  }
}

#endif  // defined(__x86_64__)

TEST_CASE("matmul variants match the naive triple loop") {
  RngStream rng(9);
  const std::size_t m = 13, k = 7, p = 5;
  auto a = random_vec(m * k, rng);
  auto b = random_vec(k * p, rng);
  std::vector<double> c(m * p), want(m * p, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t kk = 0; kk < k; ++kk)
      for (std::size_t j = 0; j < p; ++j)
        want[i * p + j] += a[i * k + kk] * b[kk * p + j];
  kernels::matmul_nn(a.data(), b.data(), c.data(), m, k, p);
  for (std::size_t i = 0; i < m * p; ++i)
    CHECK(c[i] == doctest::Approx(want[i]).epsilon(1e-12));

  // nt: C = A * B^T with B stored p x k
  auto bt = random_vec(p * k, rng);
  std::vector<double> cnt(m * p), want_nt(m * p, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t kk = 0; kk < k; ++kk)
        want_nt[i * p + j] += a[i * k + kk] * bt[j * k + kk];
  kernels::matmul_nt(a.data(), bt.data(), cnt.data(), m, k, p);
  for (std::size_t i = 0; i < m * p; ++i)
    CHECK(cnt[i] == doctest::Approx(want_nt[i]).epsilon(1e-12));

  // tn: C = A^T * B with A m x k, B m x p
  auto b2 = random_vec(m * p, rng);
  std::vector<double> ctn(k * p), want_tn(k * p, 0.0);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t kk = 0; kk < k; ++kk)
      for (std::size_t j = 0; j < p; ++j)
        want_tn[kk * p + j] += a[r * k + kk] * b2[r * p + j];
  kernels::matmul_tn(a.data(), b2.data(), ctn.data(), m, k, p);
  for (std::size_t i = 0; i < k * p; ++i)
    CHECK(ctn[i] == doctest::Approx(want_tn[i]).epsilon(1e-12));
}

TEST_CASE("backend override is honored") {
  kernels::force_backend(kernels::Backend::kScalar);
  CHECK(kernels::active_backend() == kernels::Backend::kScalar);
  if (kernels::avx2_supported()) {
    kernels::force_backend(kernels::Backend::kAvx2);
    CHECK(kernels::active_backend() == kernels::Backend::kAvx2);
  }
}

TEST_CASE("rng streams are deterministic and children independent of parent use") {
  RngStream a(42);
  RngStream b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  RngStream parent(5);
  RngStream child_before = parent.child(3);
  parent.uniform();
  parent.normal();
  RngStream child_after = parent.child(3);
  for (int i = 0; i < 16; ++i)
    CHECK(child_before.next_u64() == child_after.next_u64());

  RngStream c1 = parent.child(1);
  RngStream c2 = parent.child(2);
  CHECK(c1.next_u64() != c2.next_u64());
}

TEST_CASE("uniform and normal have sane moments") {
  RngStream rng(1234);
  double sum = 0.0, sum_sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
    sum_sq += u * u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(sum_sq / n == doctest::Approx(1.0 / 3.0).epsilon(0.01));

  double nsum = 0.0, nsq = 0.0;
  for (int i = 0; i < n; ++i) {
    double z = rng.normal();
    nsum += z;
    nsq += z * z;
  }
  CHECK(nsum / n == doctest::Approx(0.0).epsilon(0.02));
  CHECK(nsq / n == doctest::Approx(1.0).epsilon(0.02));
}
