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

#ifndef CORRLEAK_RNG_HPP
#define CORRLEAK_RNG_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>
#include <vector>

namespace corrleak {

// Deterministic random stream with counter-based splitting.
//
// Every stream carries an identity key. child(k) derives a new, statistically
// independent stream from (key, k) alone -- it does not consume or depend on
// the parent's generation state, so a stream tree keyed on
// (experiment, target index, shadow index, stage) produces identical draws no
// matter how work is scheduled across threads.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : key_(mix(seed)) { reseed(); }

  RngStream child(std::uint64_t k) const { return RngStream(key_, k); }

  RngStream child(std::initializer_list<std::uint64_t> keys) const {
    std::uint64_t key = key_;
    for (std::uint64_t k : keys) key = derive(key, k);
    return RngStream(key, kNoKey);
  }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform double in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + uniform() * (b - a); }

  // Uniform integer in [0, n). Modulo bias is below 2^-32 for n < 2^32.
  std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double t = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(t);
    has_cached_ = true;
    return r * std::cos(t);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_int(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  std::uint64_t key() const { return key_; }

 private:
  static constexpr std::uint64_t kNoKey = ~std::uint64_t{0};

  RngStream(std::uint64_t parent_key, std::uint64_t k)
      : key_(k == kNoKey ? parent_key : derive(parent_key, k)) {
    reseed();
  }

  void reseed() {
    gen_.seed(key_);
    has_cached_ = false;
    cached_ = 0.0;
  }

  // SplitMix64 finalizer.
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  static std::uint64_t derive(std::uint64_t key, std::uint64_t k) {
    return mix(key ^ mix(k + 0x9E3779B97F4A7C15ULL));
  }

  std::uint64_t key_;
  std::mt19937_64 gen_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace corrleak

#endif  // CORRLEAK_RNG_HPP
