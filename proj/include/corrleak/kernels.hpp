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

#ifndef CORRLEAK_KERNELS_HPP
#define CORRLEAK_KERNELS_HPP

#include <cstddef>

// Data-parallel inner loops shared by the dataset statistics and the model
// trainers. Scalar reference implementations always exist; an AVX2 variant is
// selected at runtime when the CPU supports it (override with the
// CORRLEAK_KERNELS environment variable, values "scalar" / "avx2" / "auto").
//
// axpy is elementwise and bit-identical across backends (no FMA contraction).
// dot / sum / sum_sq reassociate the reduction, so backends agree only up to
// rounding; tests compare them under a relative tolerance.
namespace corrleak::kernels {

enum class Backend { kScalar, kAvx2 };

Backend active_backend();
void force_backend(Backend b);
bool avx2_supported();
const char* backend_name(Backend b);

double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
double sum_sq(const double* a, std::size_t n);
// y[i] += alpha * x[i]
void axpy(double alpha, const double* x, double* y, std::size_t n);

// Small dense products built on the primitives above. A is m-by-k, row-major.
// C is written, not accumulated.
void matmul_nn(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t p);  // C = A * B,   B k-by-p
void matmul_nt(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t p);  // C = A * B^T, B p-by-k
void matmul_tn(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t p);  // C = A^T * B, A m-by-k, B m-by-p

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
double sum_sq(const double* a, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
double sum_sq(const double* a, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace avx2
#endif

}  // namespace corrleak::kernels

#endif  // CORRLEAK_KERNELS_HPP
