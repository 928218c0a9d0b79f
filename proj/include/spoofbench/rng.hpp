// Copyright 2026 The Spoofbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <random>

namespace spoofbench {

// std::uniform_real_distribution is implementation-defined, which would make
// seeded experiments differ across standard libraries. All randomness in the
// toolkit goes through these fixed mappings instead.

/// Uniform double in [0, 1) from the top 53 bits of the generator.
inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double uniform_in(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * uniform01(gen);
}

/// Uniform integer in [0, n). Modulo bias is negligible for n << 2^64.
inline std::uint64_t uniform_index(std::mt19937_64& gen, std::uint64_t n) {
  return n == 0 ? 0 : gen() % n;
}

/// Derives an independent stream for subtask `index` of a seeded run.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 step keeps substreams decorrelated even for adjacent indices.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return std::mt19937_64(z ^ (z >> 31));
}

}  // namespace spoofbench
