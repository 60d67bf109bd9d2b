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
#include <optional>
#include <ostream>
#include <string>

#include "cfvi/config.hpp"

namespace cfvi {

enum ExitCode { kExitOk = 0, kExitFailure = 1, kExitInvalid = 2 };

// Command-line overrides; unset fields keep the config's values.
struct RunOverrides {
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
  std::optional<std::string> disturbance_mode;
};

// --out, then the CFVI_OUT_DIR environment variable, then `fallback`.
std::string resolve_output_dir(const std::string& fallback, const RunOverrides& overrides);

// The run config of one sweep cell.
ExperimentConfig apply_sweep_value(const ExperimentConfig& base, const std::string& value,
                                   std::uint64_t seed);

/// Trains into `dir`: config.json, learning_curve.csv, timing.csv,
/// checkpoints/iter_NNNNN.ckpt at every evaluation, final.ckpt and a `done`
/// marker. Rows are flushed as they arrive, so a diverged run keeps its
/// partial artifacts; the TrainingDivergence is rethrown.
TrainResult run_training(const ExperimentConfig& config, const std::string& dir,
                         std::ostream& log);

// Each command returns an ExitCode and reports errors on `err`.
int cmd_train(const std::string& config_path, const RunOverrides& overrides,
              std::ostream& out, std::ostream& err);
// `eval_config_path` may be empty to reuse the checkpoint's eval settings.
int cmd_eval(const std::string& checkpoint_path, const std::string& eval_config_path,
             const RunOverrides& overrides, std::ostream& out, std::ostream& err);
int cmd_sweep(const std::string& config_path, const RunOverrides& overrides,
              std::ostream& out, std::ostream& err);
int cmd_plot(const std::string& run_dir, std::ostream& out, std::ostream& err);

}  // namespace cfvi
