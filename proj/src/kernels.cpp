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

#include "corrleak/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace corrleak::kernels {

namespace {

std::atomic<int> g_backend{-1};  // -1 = not resolved yet

Backend resolve() {
  const char* env = std::getenv("CORRLEAK_KERNELS");
  if (env != nullptr) {
    if (std::strcmp(env, "scalar") == 0) return Backend::kScalar;
    if (std::strcmp(env, "avx2") == 0 && avx2_supported()) return Backend::kAvx2;
    // "auto" or unrecognized falls through to detection.
  }
  return avx2_supported() ? Backend::kAvx2 : Backend::kScalar;
}

}  // namespace

bool avx2_supported() {
#if defined(__x86_64__)
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

Backend active_backend() {
  int b = g_backend.load(std::memory_order_relaxed);
  if (b < 0) {
    b = static_cast<int>(resolve());
    g_backend.store(b, std::memory_order_relaxed);
  }
  return static_cast<Backend>(b);
}

void force_backend(Backend b) {
  g_backend.store(static_cast<int>(b), std::memory_order_relaxed);
}

const char* backend_name(Backend b) {
  return b == Backend::kAvx2 ? "avx2" : "scalar";
}

double dot(const double* a, const double* b, std::size_t n) {
#if defined(__x86_64__)
  if (active_backend() == Backend::kAvx2) return avx2::dot(a, b, n);
#endif
  return scalar::dot(a, b, n);
}

double sum(const double* a, std::size_t n) {
#if defined(__x86_64__)
  if (active_backend() == Backend::kAvx2) return avx2::sum(a, n);
#endif
  return scalar::sum(a, n);
}

double sum_sq(const double* a, std::size_t n) {
#if defined(__x86_64__)
  if (active_backend() == Backend::kAvx2) return avx2::sum_sq(a, n);
#endif
  return scalar::sum_sq(a, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
#if defined(__x86_64__)
  if (active_backend() == Backend::kAvx2) return avx2::axpy(alpha, x, y, n);
#endif
  return scalar::axpy(alpha, x, y, n);
}

void matmul_nn(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t p) {
  for (std::size_t i = 0; i < m * p; ++i) c[i] = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * p;
    for (std::size_t kk = 0; kk < k; ++kk) {
      axpy(arow[kk], b + kk * p, crow, p);
    }
  }
}

void matmul_nt(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t p) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    for (std::size_t j = 0; j < p; ++j) {
      c[i * p + j] = dot(arow, b + j * k, k);
    }
  }
}

void matmul_tn(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t p) {
  for (std::size_t i = 0; i < k * p; ++i) c[i] = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const double* arow = a + r * k;
    const double* brow = b + r * p;
    for (std::size_t kk = 0; kk < k; ++kk) {
      axpy(arow[kk], brow, c + kk * p, p);
    }
  }
}

}  // namespace corrleak::kernels
