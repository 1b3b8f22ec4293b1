// SPDX-License-Identifier: Apache-2.0
//
// Copyright 2026 The dmimo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DMIMO_RANDOM_HPP
#define DMIMO_RANDOM_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace dmimo {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Child seed for counter `index` under `parent`. Streams derived from
/// distinct (parent, index) paths are statistically independent, and the
/// result depends only on the path, never on evaluation order.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
  return splitmix64(splitmix64(parent) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

template <class... Rest>
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index, Rest... rest) {
  return derive_seed(derive_seed(parent, index), static_cast<std::uint64_t>(rest)...);
}

/// A seeded random stream. Cheap to construct; one per independent task.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) {
    double u = std::generate_canonical<double, 53>(engine_);
    if (u >= 1.0) u = std::nextafter(1.0, 0.0);
    double x = lo + (hi - lo) * u;
    return x < hi ? x : std::nextafter(hi, lo);
  }

  bool bernoulli(double p) { return uniform(0.0, 1.0) < p; }

  double normal() { return normal_(engine_); }

  /// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
  std::complex<double> complex_normal(double variance = 1.0) {
    const double s = std::sqrt(variance / 2.0);
    const double re = normal_(engine_);
    const double im = normal_(engine_);
    return {s * re, s * im};
  }

  Eigen::VectorXcd complex_normal_vector(Eigen::Index n, double variance = 1.0) {
    Eigen::VectorXcd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = complex_normal(variance);
    return v;
  }

  /// Fills `m` with i.i.d. CN(0, variance) entries, column-major order.
  void fill_complex_normal(Eigen::Ref<Eigen::MatrixXcd> m, double variance = 1.0) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = complex_normal(variance);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace dmimo

#endif  // DMIMO_RANDOM_HPP
