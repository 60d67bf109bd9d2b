/*
 Copyright 2026 The cfvi Authors

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

#include <cstdint>
#include <random>

namespace cfvi {

using Rng = std::mt19937_64;

// SplitMix64 finalizer. Used to derive independent, reproducible streams from
// a master seed so that results do not depend on evaluation order.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                 std::uint64_t index = 0) {
  return mix_seed(mix_seed(mix_seed(seed) ^ stream) ^ index);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream,
                    std::uint64_t index = 0) {
  return Rng(derive_seed(seed, stream, index));
}

// Named streams. Keeping them distinct means enabling one random consumer
// never shifts the draws of another.
namespace stream {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kDataset = 2;
inline constexpr std::uint64_t kModulation = 3;
inline constexpr std::uint64_t kFit = 4;
inline constexpr std::uint64_t kExploration = 5;
inline constexpr std::uint64_t kEval = 6;
inline constexpr std::uint64_t kDisturbance = 7;
}  // namespace stream

}  // namespace cfvi
