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


#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>

#include <gtest/gtest.h>

#include "cfvi/errors.hpp"
#include "cfvi/eval.hpp"
#include "cfvi/models.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace cfvi {
namespace {

using testing::uniform_in;

std::shared_ptr<const ControlAffineModel> model(const std::string& name) {
  return std::shared_ptr<const ControlAffineModel>(make_model(name));
}

Problem pendulum_problem() {
  return Problem(model("pendulum"), tanh_act_scaled(5.0, 1), Vec::Ones(3));
}

ValueEnsemble net_for(const Problem& p, std::uint64_t seed, const std::string& arch = "quadratic",
                      bool zero = false) {
  ValueNetConfig cfg;
  cfg.architecture = arch;
  cfg.ensemble = 2;
  cfg.hidden = {16, 16};
  cfg.zero_output = zero;
  return ValueEnsemble(p.features(), p.model().desired_state(), cfg, seed);
}

// Double integrator whose network is the exact discounted LQ value scaled by
// `scale` (a single member with a constant L in the output bias).
struct LqSetup {
  Problem problem;
  ValueEnsemble ens;
};
LqSetup lq_setup(double rho, double scale = 1.0) {
  auto m = model("double_integrator");
  Mat a(2, 2), b(2, 1);
  a << 0, 1, 0, 0;
  b << 0, 1.0 / m->param("mass");
  const auto lq = testing::discounted_lq(a, b, Mat::Identity(2, 2), Mat::Identity(1, 1), rho);
  Problem p(m, ActionCostSpec::linear(Mat::Identity(1, 1)), Vec::Ones(2));
  ValueNetConfig cfg;
  cfg.ensemble = 1;
  cfg.hidden = {4};
  cfg.zero_output = true;
  ValueEnsemble ens(p.features(), m->desired_state(), cfg, 1);
  const Mat l = std::sqrt(scale) * Mat(lq.p.llt().matrixL());
  auto inv_softplus = [&](double y) {
    y -= cfg.diag_eps;
    return y > 30.0 ? y : std::log(std::expm1(y));
  };
  Vec& params = ens.nets()[0].params();
  params.tail(3) << inv_softplus(l(0, 0)), l(1, 0), inv_softplus(l(1, 1));
  return {std::move(p), std::move(ens)};
}

RolloutTrace synthetic_trace(const std::vector<double>& angles, const std::vector<double>& rates,
                             double dt) {
  RolloutTrace t;
  t.dt = dt;
  t.states = Mat(2, static_cast<Eigen::Index>(angles.size()));
  for (std::size_t k = 0; k < angles.size(); ++k) {
    t.states(0, k) = angles[k];
    t.states(1, k) = rates[k];
    t.time.push_back(k * dt);
  }
  return t;
}

TEST(DisturbanceMode, NamesRoundTrip) {
  for (auto m : {DisturbanceMode::kNone, DisturbanceMode::kWorstCase, DisturbanceMode::kRandom}) {
    EXPECT_EQ(parse_disturbance_mode(disturbance_mode_name(m)), m);
  }
  EXPECT_THROW(parse_disturbance_mode("adversarial"), ConfigError);
}

TEST(Rollout, TraceIsConsistent) {
  const Problem p = pendulum_problem();
  const auto ens = net_for(p, 1);
  Vec x0(2);
  x0 << 3.0, 0.1;
  const double dt = 0.01;
  const RolloutTrace t = rollout(p, ens, x0, 1.0, dt, 0.5);
  ASSERT_EQ(t.steps(), 100);
  ASSERT_EQ(t.states.cols(), 101);
  ASSERT_EQ(t.actions.cols(), 100);
  EXPECT_FALSE(t.failed);
  EXPECT_DOUBLE_EQ(t.gamma, std::exp(-0.005));
  for (int k = 0; k < t.steps(); ++k) {
    const Vec x = t.states.col(k);
    const Vec u = p.policy(ens, x);
    EXPECT_LT((t.actions.col(k) - u).norm(), 1e-12);
    EXPECT_DOUBLE_EQ(t.state_rewards[k], p.state_reward(x));
    EXPECT_DOUBLE_EQ(t.action_costs[k], cost(p.action_cost(), u));
    EXPECT_DOUBLE_EQ(t.rewards[k], t.state_rewards[k] - t.action_costs[k]);
    const Vec next = wrap_angles(p.model().step(x, u, dt), p.model().position_kinds());
    EXPECT_LT((t.states.col(k + 1) - next).norm(), 1e-12);
    EXPECT_NEAR(t.time[k], k * dt, 1e-12);
    EXPECT_EQ(t.terminal[k], k == t.steps() - 1);
  }
  double total = 0.0, state = 0.0, action = 0.0, disc = 1.0;
  for (int k = 0; k < t.steps(); ++k) {
    total += disc * dt * t.rewards[k];
    state += disc * dt * t.state_rewards[k];
    action += disc * dt * t.action_costs[k];
    disc *= t.gamma;
  }
  EXPECT_NEAR(t.discounted_return(), total, 1e-12);
  EXPECT_NEAR(t.discounted_state_return(), state, 1e-12);
  EXPECT_NEAR(t.discounted_action_cost(), action, 1e-12);
  EXPECT_EQ(t.state_disturbances.size(), 0);
}

TEST(Rollout, RecordsDisturbances) {
  const Problem p = pendulum_problem();
  const auto ens = net_for(p, 2);
  AdversaryConfig adv;
  adv.enabled = true;
  adv.state_alpha = 0.3;
  adv.action_alpha = 0.2;
  const AdversarySet set = adv.to_set(p.model());
  Vec x0(2);
  x0 << 2.0, 0.0;
  const RolloutTrace w = rollout(p, ens, x0, 0.2, 0.01, 0.5, DisturbanceMode::kWorstCase, set);
  ASSERT_EQ(w.state_disturbances.cols(), 20);
  for (int k = 0; k < 20; ++k) {
    EXPECT_NEAR(w.state_disturbances.col(k).norm(), 0.3, 1e-12);
    EXPECT_NEAR(w.action_disturbances.col(k).norm(), 0.2, 1e-12);
  }
  Rng rng(3);
  const RolloutTrace r = rollout(p, ens, x0, 0.2, 0.01, 0.5, DisturbanceMode::kRandom, set, &rng);
  for (int k = 0; k < 20; ++k) {
    EXPECT_LE(r.state_disturbances.col(k).norm(), 0.3 + 1e-12);
    EXPECT_LE(r.action_disturbances.col(k).norm(), 0.2 + 1e-12);
  }
  EXPECT_THROW(rollout(p, ens, x0, 0.2, 0.01, 0.5, DisturbanceMode::kRandom, set),
               std::invalid_argument);
}

TEST(Rollout, BlowUpMarksTraceFailed) {
  const LqSetup s = lq_setup(0.5, 1e150);
  Vec x0(2);
  x0 << 0.5, 0.0;
  const RolloutTrace t = rollout(s.problem, s.ens, x0, 1.0, 0.01, 0.5);
  EXPECT_TRUE(t.failed);
  EXPECT_LT(t.steps(), 100);
  EXPECT_GT(t.steps(), 0);
  EXPECT_EQ(t.states.cols(), t.steps() + 1);
  EXPECT_EQ(static_cast<int>(t.time.size()), t.steps() + 1);
  EXPECT_EQ(t.actions.cols(), t.steps());
  EXPECT_TRUE(t.terminal.back());
  EXPECT_FALSE(success(t, 0, {}));
}

TEST(Rollout, ZeroNetLeavesPendulumHanging) {
  const Problem p = pendulum_problem();
  const auto ens = net_for(p, 4, "mlp", true);
  Vec x0(2);
  x0 << std::numbers::pi, 0.0;
  const RolloutTrace t = rollout(p, ens, x0, 5.0, 0.01, 0.5);
  EXPECT_EQ(t.actions.cwiseAbs().maxCoeff(), 0.0);
  for (int k = 0; k < t.steps(); ++k) {
    EXPECT_NEAR(std::abs(t.states(0, k)), std::numbers::pi, 1e-9);
    EXPECT_NEAR(t.state_rewards[k], -4.0, 1e-9);
  }
  EXPECT_FALSE(success(t, 0, {}));
}

TEST(Rollout, ReturnMatchesTargetRewardIntegral) {
  // With V = 0 the last n-step return is the reward integral alone; the
  // trace sums the same trajectory with left endpoints, an O(dt) difference.
  const Problem p = pendulum_problem();
  const auto ens = net_for(p, 5, "mlp", true);
  TrainConfig cfg;
  cfg.rho = 0.5;
  cfg.beta = 4.6;
  TargetOptions opts;
  opts.keep_returns = true;
  Rng rng(6);
  for (int i = 0; i < 10; ++i) {
    Vec x0 = sample_initial_state(p.model(), 0.5, rng);
    const TargetBatch tb = compute_value_targets(p, ens, cfg, Mat(x0), opts);
    const int steps = cfg.horizon_steps();
    const RolloutTrace t = rollout(p, ens, x0, steps * cfg.dt, cfg.dt, cfg.rho);
    const double r_t = tb.returns(steps - 1, 0);
    const double rmax = 4.0 + 64.0;  // bound on |q| along the way; u = 0
    EXPECT_NEAR(t.discounted_return(), r_t, cfg.dt * rmax);
    EXPECT_NEAR(t.discounted_return(), r_t, 1e-2 * std::abs(r_t));
  }
}

TEST(Rollout, WorstCaseNotBetterThanNominalOnExactValue) {
  // For the exact LQ value, d/dt (e^{-rho t} V) = e^{-rho t} (grad V . xi - r):
  // the worst-case state adversary removes alpha |grad V| per unit time.
  const double rho = 0.5;
  const LqSetup s = lq_setup(rho);
  AdversaryConfig adv;
  adv.enabled = true;
  adv.state_alpha = 0.2;
  const AdversarySet set = adv.to_set(s.problem.model());
  Rng rng(7);
  double worst_sum = 0.0, random_sum = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Vec x0 = 0.5 * uniform_in(s.problem.model().domain(), rng);
    const double nominal = rollout(s.problem, s.ens, x0, 8.0, 0.01, rho).discounted_return();
    const double worst =
        rollout(s.problem, s.ens, x0, 8.0, 0.01, rho, DisturbanceMode::kWorstCase, set)
            .discounted_return();
    Rng dist(100 + i);
    const double random =
        rollout(s.problem, s.ens, x0, 8.0, 0.01, rho, DisturbanceMode::kRandom, set, &dist)
            .discounted_return();
    EXPECT_LT(worst, nominal);
    EXPECT_LE(worst, random);
    worst_sum += worst;
    random_sum += random;
  }
  EXPECT_LT(worst_sum, random_sum);
}

TEST(Success, InclusiveThresholdsOverHoldWindow) {
  SuccessCriteria c;
  c.angle_tol = 0.1;
  c.rate_tol = 0.5;
  c.hold_time = 0.2;
  const double dt = 0.1;
  // Early samples are outside the window and may violate the thresholds.
  EXPECT_TRUE(success(synthetic_trace({3.0, 2.0, 0.1, -0.1, 0.05}, {9, 9, 0.5, -0.5, 0}, dt), 0, c));
  EXPECT_FALSE(success(synthetic_trace({3.0, 2.0, 0.1, -0.1001, 0.05}, {9, 9, 0, 0, 0}, dt), 0, c));
  EXPECT_FALSE(success(synthetic_trace({3.0, 2.0, 0.1, 0.0, 0.0}, {9, 9, 0.5001, 0, 0}, dt), 0, c));
  EXPECT_FALSE(success(synthetic_trace({0.0, 0.0, 0.0, 2.0, 0.0}, {0, 0, 0, 0, 0}, dt), 0, c));
  // Angles count modulo 2 pi.
  EXPECT_TRUE(success(synthetic_trace({0.0, 2 * std::numbers::pi, 2 * std::numbers::pi - 0.05},
                                      {0, 0, 0}, dt), 0, c));
  // Shorter than the hold time.
  EXPECT_FALSE(success(synthetic_trace({0.0, 0.0}, {0, 0}, dt), 0, c));
  RolloutTrace failed = synthetic_trace({0.0, 0.0, 0.0, 0.0}, {0, 0, 0, 0}, dt);
  EXPECT_TRUE(success(failed, 0, c));
  failed.failed = true;
  EXPECT_FALSE(success(failed, 0, c));
}

TEST(Summary, KnownValues) {
  const Summary s = summarize({4.0, 1.0, 3.0, 2.0});
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.std, std::sqrt(1.25));
  EXPECT_DOUBLE_EQ(s.band_low, 2.5 - 2.0 * std::sqrt(1.25));
  EXPECT_DOUBLE_EQ(s.band_high, 2.5 + 2.0 * std::sqrt(1.25));
  EXPECT_DOUBLE_EQ(s.p25, 1.75);
  EXPECT_DOUBLE_EQ(s.p50, 2.5);
  EXPECT_DOUBLE_EQ(s.p75, 3.25);
  const Summary one = summarize({-7.0});
  EXPECT_EQ(one.std, 0.0);
  EXPECT_EQ(one.p25, -7.0);
  EXPECT_EQ(one.p75, -7.0);
  const Summary same = summarize({2.0, 2.0, 2.0});
  EXPECT_EQ(same.std, 0.0);
  EXPECT_EQ(same.band_low, 2.0);
  EXPECT_THROW(summarize({}), std::invalid_argument);
}

TEST(RewardStats, RecomputedFromTraces) {
  const Problem p = pendulum_problem();
  const auto ens = net_for(p, 8);
  TrainConfig tc;
  tc.rho = 0.5;
  EvalOptions eo;
  eo.episodes = 6;
  eo.duration = 3.0;
  eo.seed = 9;
  const auto traces = evaluate_policy(p, ens, tc, eo);
  const RewardStats st = reward_stats(traces, 0, {});
  ASSERT_EQ(st.episodes, 6);
  double total = 0.0, state = 0.0, action = 0.0;
  int ok = 0;
  for (const auto& t : traces) {
    total += t.discounted_return();
    state += t.discounted_state_return();
    action -= t.discounted_action_cost();
    ok += success(t, 0, {});
  }
  EXPECT_NEAR(st.total.mean, total / 6, 1e-12);
  EXPECT_NEAR(st.state.mean, state / 6, 1e-12);
  EXPECT_NEAR(st.action.mean, action / 6, 1e-12);
  EXPECT_NEAR(st.total.mean, st.state.mean + st.action.mean, 1e-9);
  EXPECT_DOUBLE_EQ(st.success_rate, ok / 6.0);
  EXPECT_EQ(st.failures, 0);
  EXPECT_THROW(reward_stats({}, 0, {}), std::invalid_argument);
}

TEST(EvaluatePolicy, DeterministicAndThreadIndependent) {
  const Problem p = pendulum_problem();
  const auto ens = net_for(p, 10);
  TrainConfig tc;
  tc.adversary.enabled = true;
  tc.adversary.state_alpha = 0.5;
  EvalOptions eo;
  eo.episodes = 5;
  eo.duration = 1.0;
  eo.seed = 11;
  eo.mode = DisturbanceMode::kRandom;
  eo.threads = 1;
  const auto a = evaluate_policy(p, ens, tc, eo);
  eo.threads = 3;
  const auto b = evaluate_policy(p, ens, tc, eo);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(a[i].states, b[i].states);
    EXPECT_EQ(a[i].state_disturbances, b[i].state_disturbances);
    // Episodes start near hanging.
    EXPECT_LE(std::abs(std::abs(a[i].states(0, 0)) - std::numbers::pi), eo.jitter + 1e-12);
  }
  EXPECT_NE(a[0].states, a[1].states);
  eo.episodes = 0;
  EXPECT_THROW(evaluate_policy(p, ens, tc, eo), ConfigError);
}

TEST(Sweep, AxisNamesAndApplication) {
  for (auto a : {SweepAxis::kBeta, SweepAxis::kStateAlpha, SweepAxis::kActionAlpha,
                 SweepAxis::kObservationAlpha, SweepAxis::kModelFraction,
                 SweepAxis::kArchitecture}) {
    EXPECT_EQ(parse_sweep_axis(sweep_axis_name(a)), a);
  }
  EXPECT_THROW(parse_sweep_axis("gamma"), ConfigError);
  const TrainSetup base{pendulum_problem(), TrainConfig{}, ValueNetConfig{}, SuccessCriteria{}};
  EXPECT_EQ(apply_axis(base, SweepAxis::kBeta, "36.8").train.beta, 36.8);
  const TrainSetup s = apply_axis(base, SweepAxis::kObservationAlpha, "0.25");
  EXPECT_TRUE(s.train.adversary.enabled);
  EXPECT_EQ(s.train.adversary.observation_alpha, 0.25);
  EXPECT_EQ(apply_axis(base, SweepAxis::kArchitecture, "mlp").net.architecture, "mlp");
  EXPECT_THROW(apply_axis(base, SweepAxis::kBeta, "fast"), ConfigError);
  EXPECT_THROW(apply_axis(base, SweepAxis::kBeta, "1.5x"), ConfigError);
}

TEST(Sweep, RunsEveryValueAndSeedAndRecordsFailures) {
  const TrainSetup base{pendulum_problem(), TrainConfig{}, ValueNetConfig{}, SuccessCriteria{}};
  std::vector<std::pair<double, std::uint64_t>> calls;
  auto run = [&](const TrainSetup& s, const std::string& value, std::uint64_t seed) {
    calls.emplace_back(s.train.beta, s.train.seed);
    if (value == "9.2" && seed == 2) throw TrainingDivergence("diverged", 4);
    SweepRun r;
    r.value = value;
    r.seed = seed;
    r.ok = true;
    r.curve.push_back(CurveRecord{10, 0.1, -1.0, -2.0, 0.0, 1.0, 5});
    return r;
  };
  const auto runs =
      ablation_sweep(base, SweepAxis::kBeta, {"18.4", "9.2", "oops"}, {1, 2}, run);
  ASSERT_EQ(runs.size(), 6u);
  ASSERT_EQ(calls.size(), 4u);  // "oops" fails before training
  EXPECT_EQ(calls[0], std::make_pair(18.4, std::uint64_t{1}));
  EXPECT_EQ(calls[3], std::make_pair(9.2, std::uint64_t{2}));
  EXPECT_TRUE(runs[0].ok);
  EXPECT_FALSE(runs[3].ok);
  EXPECT_NE(runs[3].error.find("diverged"), std::string::npos);
  EXPECT_FALSE(runs[4].ok);
  EXPECT_EQ(runs[5].value, "oops");
  EXPECT_EQ(runs[5].seed, 2u);
  EXPECT_THROW(ablation_sweep(base, SweepAxis::kBeta, {}, {1}, run), ConfigError);
}

TEST(Sweep, SingleValueTrainsForReal) {
  TrainConfig tc;
  tc.iterations = 2;
  tc.eval_cadence = 1;
  tc.eval_episodes = 1;
  tc.eval_duration = 0.5;
  tc.dataset.n_samples = 64;
  tc.fit.epochs = 1;
  ValueNetConfig net;
  net.ensemble = 1;
  net.hidden = {4};
  const TrainSetup base{pendulum_problem(), tc, net, SuccessCriteria{}};
  const auto runs = ablation_sweep(base, SweepAxis::kStateAlpha, {"0.1"}, {3});
  ASSERT_EQ(runs.size(), 1u);
  EXPECT_TRUE(runs[0].ok) << runs[0].error;
  EXPECT_EQ(runs[0].curve.size(), 2u);
}

TEST(Sweep, IterationsToSuccess) {
  std::vector<CurveRecord> curve(3);
  curve[0].iteration = 5;
  curve[1].iteration = 10;
  curve[2].iteration = 15;
  EXPECT_EQ(iterations_to_success(curve), -1);
  curve[1].success_rate = 1.0;
  curve[2].success_rate = 1.0;
  EXPECT_EQ(iterations_to_success(curve), 10);
  curve[0].success_rate = 0.99;
  EXPECT_EQ(iterations_to_success(curve), 10);
}

}  // namespace
}  // namespace cfvi
