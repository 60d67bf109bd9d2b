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

#include <functional>
#include <string>
#include <vector>

#include "cfvi/fvi.hpp"

namespace cfvi {

enum class DisturbanceMode { kNone, kWorstCase, kRandom };
std::string disturbance_mode_name(DisturbanceMode m);
DisturbanceMode parse_disturbance_mode(const std::string& name);

struct RolloutTrace {
  double dt = 0.0;
  double gamma = 1.0;
  std::vector<double> time;  // steps + 1 entries
  Mat states;                // state_dim x (steps + 1)
  Mat actions;               // action_dim x steps
  std::vector<double> state_rewards;  // q_c(x_k)
  std::vector<double> action_costs;   // g_c(u_k)
  std::vector<double> rewards;        // q_c - g_c
  Mat state_disturbances;
  Mat action_disturbances;
  Mat observation_disturbances;
  Mat param_disturbances;
  std::vector<bool> terminal;  // true on the last recorded step
  bool failed = false;         // integration blew up

  int steps() const { return static_cast<int>(rewards.size()); }
  // sum_k gamma^k dt r_k, and its state and action parts.
  double discounted_return() const;
  double discounted_state_return() const;
  double discounted_action_cost() const;
};

/// Closed-form policy rollout. Worst-case mode applies every configured
/// channel at full size; random mode samples uniformly from each set.
RolloutTrace rollout(const Problem& problem, const ValueEnsemble& ens,
                     const Vec& x0, double duration, double dt, double rho,
                     DisturbanceMode mode = DisturbanceMode::kNone,
                     const AdversarySet& set = {}, Rng* rng = nullptr);

// Pole within angle_tol of upright and |rate| within rate_tol for every
// sample in the final hold_time seconds (inclusive thresholds).
bool success(const RolloutTrace& trace, int pole_index,
             const SuccessCriteria& criteria);

struct Summary {
  double mean = 0.0;
  double std = 0.0;
  double band_low = 0.0;   // mean - 2 std
  double band_high = 0.0;  // mean + 2 std
  double p25 = 0.0;
  double p50 = 0.0;
  double p75 = 0.0;
};
Summary summarize(std::vector<double> values);

struct RewardStats {
  int episodes = 0;
  Summary total;
  Summary state;
  Summary action;
  double success_rate = 0.0;
  int failures = 0;
};
RewardStats reward_stats(const std::vector<RolloutTrace>& traces, int pole_index,
                         const SuccessCriteria& criteria);

struct EvalOptions {
  int episodes = 30;
  double duration = 10.0;
  double jitter = 0.1;
  DisturbanceMode mode = DisturbanceMode::kNone;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};
// Episodes start from the hanging position; episode i uses its own stream.
std::vector<RolloutTrace> evaluate_policy(const Problem& problem,
                                          const ValueEnsemble& ens,
                                          const TrainConfig& train,
                                          const EvalOptions& options);

struct TrainSetup {
  Problem problem;
  TrainConfig train;
  ValueNetConfig net;
  SuccessCriteria success;
};

enum class SweepAxis {
  kBeta,
  kStateAlpha,
  kActionAlpha,
  kObservationAlpha,
  kModelFraction,
  kArchitecture
};
std::string sweep_axis_name(SweepAxis a);
SweepAxis parse_sweep_axis(const std::string& name);
TrainSetup apply_axis(const TrainSetup& base, SweepAxis axis, const std::string& value);

struct SweepRun {
  std::string value;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::vector<CurveRecord> curve;
};

// First evaluated iteration with a full success rate, or -1.
int iterations_to_success(const std::vector<CurveRecord>& curve);

/// Trains once per (value, seed). `run` may replace the default training
/// call (e.g. to resume from disk); failures are recorded and the sweep goes on.
std::vector<SweepRun> ablation_sweep(
    const TrainSetup& base, SweepAxis axis, const std::vector<std::string>& values,
    const std::vector<std::uint64_t>& seeds,
    const std::function<SweepRun(const TrainSetup&, const std::string&, std::uint64_t)>&
        run = {});

}  // namespace cfvi
