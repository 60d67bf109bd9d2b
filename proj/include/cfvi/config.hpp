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
#include <string>
#include <vector>

#include "cfvi/eval.hpp"
#include "cfvi/models.hpp"

namespace cfvi {

/// Action cost before composition with the model's action dimension. Empty
/// vectors take the defaults: unit scale, zero shift, identity R.
struct ActionCostConfig {
  std::string family = "tanh";
  std::vector<double> action_scale;
  double cost_scale = 1.0;
  std::vector<double> action_shift;
  std::vector<std::vector<double>> R;  // linear family only, rows
};

struct EvalSection {
  int episodes = 30;
  double duration = 10.0;
  double jitter = 0.1;
  std::string mode = "none";  // none, worst_case, random
  ParamOverrides model_overrides;  // on top of model_overrides, eval only
  // Disturbance sets for worst_case/random modes; unset uses the training
  // adversary.
  std::optional<AdversaryConfig> adversary;
};

struct SweepSection {
  std::string axis;  // empty: no sweep
  std::vector<std::string> values;
  std::vector<std::uint64_t> seeds;
};

/// Everything a run needs. `train.seed` is the run seed and `train.adversary`
/// holds the adversary channels.
struct ExperimentConfig {
  std::string system = "pendulum";
  ParamOverrides model_overrides;
  ActionCostConfig action_cost;
  std::vector<double> state_cost;  // empty: system default
  TrainConfig train;
  ValueNetConfig value_net;
  SuccessCriteria success;
  EvalSection eval;
  SweepSection sweep;
  std::string output_dir = "runs/default";
};

/// Parses JSON text. Syntax errors report `source:line:column`; unknown keys
/// and type errors name the offending field path. The result is validated.
ExperimentConfig parse_config(const std::string& text,
                              const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

// Canonical JSON with every field present.
std::string to_json(const ExperimentConfig& config);
// FNV-1a 64 of the canonical JSON, as 16 hex digits. output_dir and
// train.threads do not change results and are left out.
std::string config_hash(const ExperimentConfig& config);

/// Throws ConfigError naming the field.
void validate(const ExperimentConfig& config);

// 1 on position features, 0.1 on velocities.
Vec default_state_cost(const ControlAffineModel& model);

ActionCostSpec build_action_cost(const ActionCostConfig& config, int action_dim);
TrainSetup build_setup(const ExperimentConfig& config);
// Same problem on the evaluation model (with eval.model_overrides).
Problem build_eval_problem(const ExperimentConfig& config);

}  // namespace cfvi
