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
#include <string>

#include "cfvi/config.hpp"

namespace cfvi {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ExperimentConfig config;
  std::string config_hash;  // of the producing config
  int iteration = 0;
  ValueEnsemble ensemble;
};

/// Binary layout: "CFVICKPT", uint32 schema version, uint64 header length,
/// JSON header (config, hash, iteration, parameter counts), then every
/// member's parameters as little-endian float64. Written to a temporary file
/// and renamed into place.
void save_checkpoint(const std::string& path, const ExperimentConfig& config,
                     const ValueEnsemble& ensemble, int iteration);

/// Throws CheckpointError on a bad magic, a different schema version, a
/// truncated file or parameters that do not fit the stored architecture.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace cfvi
