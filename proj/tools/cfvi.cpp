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


// cfvi command-line tool: train, eval, sweep and plot.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cfvi/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Continuous fitted value iteration experiments"};
  app.require_subcommand(1);

  std::string config, checkpoint, run_dir;
  std::optional<std::string> out, mode;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", out, "Output directory (overrides CFVI_OUT_DIR and the config)");
    cmd->add_option("--seed-override", seed, "Replace the config seed");
  };

  auto* train = app.add_subcommand("train", "Train a value function");
  train->add_option("--config", config, "Experiment config (JSON)")->required();
  add_common(train);

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("--config", config, "Config whose eval and success sections are used");
  eval->add_option("--episodes", episodes, "Number of episodes");
  eval->add_option("--disturbance-mode", mode, "none, worst_case or random");
  add_common(eval);

  auto* sweep = app.add_subcommand("sweep", "Train once per sweep value and seed");
  sweep->add_option("--config", config, "Experiment config with a sweep section")->required();
  add_common(sweep);

  auto* plot = app.add_subcommand("plot", "Render plots from a run or sweep directory");
  plot->add_option("run_dir", run_dir, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cfvi::kExitOk : cfvi::kExitInvalid;
  }

  const cfvi::RunOverrides overrides{out, seed, episodes, mode};
  if (*train) return cfvi::cmd_train(config, overrides, std::cout, std::cerr);
  if (*eval) return cfvi::cmd_eval(checkpoint, config, overrides, std::cout, std::cerr);
  if (*sweep) return cfvi::cmd_sweep(config, overrides, std::cout, std::cerr);
  return cfvi::cmd_plot(run_dir, std::cout, std::cerr);
}
