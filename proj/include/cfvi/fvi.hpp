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
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cfvi/action_cost.hpp"
#include "cfvi/adversary.hpp"
#include "cfvi/dynamics.hpp"
#include "cfvi/rng.hpp"
#include "cfvi/value_net.hpp"

namespace cfvi {

/// System, reward and feature map shared by training and evaluation.
/// r_c(x, u) = q_c(x) - g_c(u) with
/// q_c(x) = -(h(x) - h(x_des))^T diag(q) (h(x) - h(x_des)).
class Problem {
 public:
  Problem(std::shared_ptr<const ControlAffineModel> model,
          ActionCostSpec action_cost, Vec state_cost);

  const ControlAffineModel& model() const { return *model_; }
  std::shared_ptr<const ControlAffineModel> model_ptr() const { return model_; }
  const ActionCostSpec& action_cost() const { return action_cost_; }
  const Vec& state_cost() const { return state_cost_; }
  const FeatureTransform& features() const { return features_; }

  double state_reward(const Vec& x) const;
  double reward(const Vec& x, const Vec& u) const;
  // u = grad g*(B(x)^T grad V), with nominal B.
  Vec policy(const Vec& x, const Vec& grad_v) const;
  Vec policy(const ValueEnsemble& ens, const Vec& x) const;

  // Wraps continuous joints and clips velocities to the domain. Prismatic
  // positions are left unbounded.
  Vec project(const Vec& x) const;

 private:
  std::shared_ptr<const ControlAffineModel> model_;
  ActionCostSpec action_cost_;
  Vec state_cost_;
  FeatureTransform features_;
  Vec z_des_;
};

// Per-channel adversary settings. When `enabled` is false no disturbance is
// computed at all; when true, every channel is active even at zero size.
struct AdversaryConfig {
  bool enabled = false;
  double state_alpha = 0.0;
  double action_alpha = 0.0;
  double observation_alpha = 0.0;
  double model_fraction = 0.0;  // box of +-fraction * |theta|
  double wiener_sigma = 0.0;    // 0 disables amplitude modulation

  AdversarySet to_set(const ControlAffineModel& model) const;
};

struct DatasetConfig {
  std::string mode = "dp";  // "dp" or "rtdp"
  int n_samples = 2000;     // DP dataset size
  int buffer_capacity = 20000;
  int n_rollouts = 10;           // RTDP episodes per iteration
  double rollout_duration = 5.0;  // seconds per RTDP episode
  double exploration_scale = 0.5;  // action noise amplitude
  double exploration_sigma = 1.0;  // Wiener diffusion of the noise level
};

struct TrainConfig {
  double rho = 1.0;    // continuous discount [1/s]
  double dt = 0.01;    // control step [s]
  double beta = 18.4;  // n-step decay [1/s]
  DatasetConfig dataset;
  AdversaryConfig adversary;
  int iterations = 100;
  int eval_cadence = 10;
  int eval_episodes = 10;
  double eval_duration = 10.0;
  double init_jitter = 0.1;
  FitConfig fit;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0: hardware concurrency
  bool stop_on_success = false;  // end training at the first fully successful evaluation

  double gamma() const;    // exp(-rho dt)
  double lambda() const;   // exp(-beta dt)
  double horizon() const;  // -ln(1e-4) / beta
  int horizon_steps() const;
  void validate() const;
};

struct SuccessCriteria {
  double angle_tol = 0.1;  // rad, closed
  double rate_tol = 0.5;   // rad/s, closed
  double hold_time = 2.0;  // s
};

struct TargetBatch {
  Mat states;
  Vec targets;
  Mat returns;  // R_t at t = k dt per state (row k-1 holds k = 1..K); optional
};

// int_0^dt beta e^{-beta t} h(t / dt) dt for the cubic Hermite basis on one
// step: r0/r1 weight the end values, d0/d1 the end slopes times dt.
struct KernelWeights {
  double r0 = 0.0, d0 = 0.0, r1 = 0.0, d1 = 0.0;
  double decay = 1.0;  // exp(-beta dt)
  static KernelWeights make(double beta, double dt);
};

struct TargetOptions {
  bool keep_returns = false;
  std::uint64_t seed = 0;  // modulation stream
  int iteration = 0;
  std::uint64_t index_offset = 0;
};

/// Exponentially weighted n-step targets
///   V_tar(x) = int_0^T beta e^{-beta t} R_t dt + e^{-beta T} R_T,
///   R_t = int_0^t e^{-rho s} r(x_s, u_s) ds + e^{-rho t} V(x_t),
/// along K = ceil(T / dt) Euler steps of the closed-form policy (and the
/// worst-case adversary when enabled), with T = K dt. The action is held over
/// each step, so the state moves on a straight line between grid points. On
/// each step the reward integral uses Simpson's rule and the kernel is
/// integrated exactly against the cubic Hermite interpolant of R_t, whose
/// slope is e^{-rho t} (r + grad V . xdot - rho V).
TargetBatch compute_value_targets(const Problem& problem,
                                  const ValueEnsemble& ens,
                                  const TrainConfig& config, const Mat& x0,
                                  const TargetOptions& options = {});

Mat dp_dataset(const ControlAffineModel& model, int n, Rng& rng);

// Pole hanging down with uniform jitter on every coordinate; systems without
// a revolute pole sample uniformly from the domain.
Vec sample_initial_state(const ControlAffineModel& model, double jitter, Rng& rng);

class ReplayBuffer {
 public:
  explicit ReplayBuffer(int capacity);
  void add(const Vec& x);
  void add(const Mat& xs);
  int size() const { return static_cast<int>(states_.size()); }
  int capacity() const { return capacity_; }
  Mat states() const;  // oldest first

 private:
  int capacity_;
  std::deque<Vec> states_;
};

// Explores with the current policy plus Wiener-modulated action noise and
// appends every visited state.
void rtdp_collect(const Problem& problem, const ValueEnsemble& ens,
                  const TrainConfig& config, ReplayBuffer* buffer, Rng& rng);

struct CurveRecord {
  int iteration = 0;
  double loss = 0.0;
  double mean_return = 0.0;
  double min_return = 0.0;
  double max_return = 0.0;
  double success_rate = 0.0;
  int dataset_size = 0;
};

struct TrainCallbacks {
  // Called after each evaluation with the record and the current network.
  std::function<void(const CurveRecord&, const ValueEnsemble&)> on_eval;
  // Wall time of each iteration in seconds.
  std::function<void(int iteration, double seconds)> on_timing;
};

struct TrainResult {
  ValueEnsemble ensemble;
  std::vector<CurveRecord> curve;
};

/// cFVI / rFVI. Each iteration computes targets on the dataset with a frozen
/// network, then fits. Throws TrainingDivergence with the iteration number.
TrainResult train(const Problem& problem, const TrainConfig& config,
                  const ValueNetConfig& net, const SuccessCriteria& success = {},
                  const TrainCallbacks& callbacks = {});

}  // namespace cfvi
