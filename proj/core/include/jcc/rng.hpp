/*
 Copyright 2026 The jcc-control authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

#include <cmath>
#include <cstdint>

namespace jcc {

/// Deterministic counter-style generator (splitmix64 core).
///
/// Kernel estimation and rollouts must be bit-reproducible across runs and
/// independent of the parallel schedule, so every consumer derives its own
/// stream from (seed, indices) instead of sharing a global generator.
/// std::normal_distribution is implementation-defined; Box-Muller is not.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    /// Stream derived by mixing the seed with stream identifiers.
    static Rng derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
        Rng r(seed);
        std::uint64_t s = r.next_u64();
        s ^= mix(a + 0x9e3779b97f4a7c15ULL);
        s ^= mix(b + 0x7f4a7c159e3779b9ULL);
        return Rng(s);
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    /// Uniform on (0, 1): 53-bit mantissa, offset so the value is never 0.
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; the second variate of each pair is cached.
    double next_normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

    double next_normal(double mean, double stddev) { return mean + stddev * next_normal(); }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

} // namespace jcc
