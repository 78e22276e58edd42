//
// Copyright 2026 The fedhkd Authors
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

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "fedhkd/error.hpp"

namespace fedhkd {

// Every random draw in the library goes through this generator. The standard
// library's distributions are implementation-defined, which would break the
// byte-for-byte reproducibility contract, so uniform/normal/gamma sampling is
// implemented here on top of xoshiro256** and never changes behavior across
// platforms or standard library versions.

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stable derivation of independent stream seeds from a root seed plus up to
// three tag words (round, client id, purpose). Clients may therefore run in
// any order, on any number of workers, without changing a single draw.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = root;
  std::uint64_t out = splitmix64_next(s);
  s ^= a * 0x9e3779b97f4a7c15ULL;
  out ^= splitmix64_next(s);
  s ^= b * 0xc2b2ae3d27d4eb4fULL;
  out ^= splitmix64_next(s);
  s ^= c * 0x165667b19e3779f9ULL;
  out ^= splitmix64_next(s);
  return out;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    // xoshiro256** state must not be all-zero; splitmix64 seeding avoids it.
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64_next(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Unbiased integer in [0, bound) via rejection.
  std::uint64_t next_below(std::uint64_t bound) {
    if (bound == 0) throw Error("Rng::next_below: bound must be positive");
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller (one value per call; the paired value is
  // discarded so draw counts stay independent of call sites).
  double next_normal() {
    const double u1 = 1.0 - next_unit();  // (0, 1]
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double next_normal(double mean, double stddev) {
    return mean + stddev * next_normal();
  }

  // Gamma(alpha, 1) via Marsaglia-Tsang, boosted for alpha < 1.
  double next_gamma(double alpha) {
    if (alpha <= 0.0) throw Error("Rng::next_gamma: alpha must be positive");
    if (alpha < 1.0) {
      const double u = 1.0 - next_unit();  // (0, 1]
      return next_gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x;
      double v;
      do {
        x = next_normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = next_unit();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
        return d * v;
    }
  }

  // Symmetric Dirichlet(alpha) over `out.size()` coordinates.
  void dirichlet(double alpha, std::span<double> out) {
    double total = 0.0;
    for (auto& p : out) {
      p = next_gamma(alpha);
      total += p;
    }
    if (total <= 0.0) {
      // All draws underflowed to zero; fall back to uniform proportions.
      for (auto& p : out) p = 1.0 / static_cast<double>(out.size());
      return;
    }
    for (auto& p : out) p /= total;
  }

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
};

}  // namespace fedhkd
