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

#include "cfvi/eval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cfvi/errors.hpp"
#include "cfvi/parallel.hpp"

namespace cfvi {
namespace {

Vec sample_ball(Eigen::Index n, double alpha, Rng& rng) {
  if (alpha == 0.0) return Vec::Zero(n);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec d(n);
  for (Eigen::Index i = 0; i < n; ++i) d[i] = g(rng);
  return alpha * std::pow(u(rng), 1.0 / static_cast<double>(n)) * d / d.norm();
}

Vec sample_box(const AmplitudeBox& box, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec x(box.lower.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    x[i] = box.lower[i] + u(rng) * (box.upper[i] - box.lower[i]);
  }
  return x;
}

double percentile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double discounted_sum(const std::vector<double>& r, double gamma, double dt) {
  double total = 0.0, disc = 1.0;
  for (double v : r) {
    total += disc * dt * v;
    disc *= gamma;
  }
  return total;
}

void append_col(Mat* m, const Vec& v, int k) {
  if (m->rows() != v.size()) return;
  m->col(k) = v;
}

}  // namespace

std::string disturbance_mode_name(DisturbanceMode m) {
  switch (m) {
    case DisturbanceMode::kNone:
      return "none";
    case DisturbanceMode::kWorstCase:
      return "worst_case";
    case DisturbanceMode::kRandom:
      return "random";
  }
  return "none";
}

DisturbanceMode parse_disturbance_mode(const std::string& name) {
  for (auto m : {DisturbanceMode::kNone, DisturbanceMode::kWorstCase, DisturbanceMode::kRandom}) {
    if (disturbance_mode_name(m) == name) return m;
  }
  throw ConfigError("unknown disturbance mode '" + name +
                    "' (expected none, worst_case or random)");
}

double RolloutTrace::discounted_return() const { return discounted_sum(rewards, gamma, dt); }

double RolloutTrace::discounted_state_return() const {
  return discounted_sum(state_rewards, gamma, dt);
}

double RolloutTrace::discounted_action_cost() const {
  return discounted_sum(action_costs, gamma, dt);
}

RolloutTrace rollout(const Problem& problem, const ValueEnsemble& ens, const Vec& x0,
                     double duration, double dt, double rho, DisturbanceMode mode,
                     const AdversarySet& set, Rng* rng) {
  if (!(duration > 0.0) || !(dt > 0.0)) {
    throw std::invalid_argument("rollout needs duration > 0 and dt > 0");
  }
  if (mode == DisturbanceMode::kRandom && !rng) {
    throw std::invalid_argument("random disturbances need an rng");
  }
  const ControlAffineModel& model = problem.model();
  const int steps = std::max(1, static_cast<int>(std::llround(duration / dt)));
  const int nx = model.state_dim(), nu = model.action_dim(), np = model.param_dim();
  const bool disturbed = mode != DisturbanceMode::kNone && !set.empty();

  RolloutTrace t;
  t.dt = dt;
  t.gamma = std::exp(-rho * dt);
  t.states = Mat::Zero(nx, steps + 1);
  t.actions = Mat::Zero(nu, steps);
  if (disturbed) {
    if (set.state) t.state_disturbances = Mat::Zero(nx, steps);
    if (set.action) t.action_disturbances = Mat::Zero(nu, steps);
    if (set.observation) t.observation_disturbances = Mat::Zero(nx, steps);
    if (set.model) t.param_disturbances = Mat::Zero(np, steps);
  }
  Vec x = x0;
  t.states.col(0) = x;
  t.time.push_back(0.0);
  int k = 0;
  for (; k < steps; ++k) {
    Mat g;
    ens.values_and_gradients(x, &g);
    const Vec grad = g.col(0);
    const Vec u = problem.policy(x, grad);
    if (!u.allFinite()) {
      t.failed = true;
      break;
    }
    const double q = problem.state_reward(x);
    const double c = cost(problem.action_cost(), u);
    DisturbanceBundle d;
    if (disturbed && mode == DisturbanceMode::kWorstCase) {
      d = worst_case_disturbance(model, set, x, u, grad, 1.0);
    } else if (disturbed) {
      if (set.state) d.state = sample_ball(nx, set.state->alpha, *rng);
      if (set.action) d.action = sample_ball(nu, set.action->alpha, *rng);
      if (set.observation) d.observation = sample_ball(nx, set.observation->alpha, *rng);
      if (set.model) d.params = sample_box(*set.model, *rng);
    }
    t.actions.col(k) = u;
    t.state_rewards.push_back(q);
    t.action_costs.push_back(c);
    t.rewards.push_back(q - c);
    if (d.state) append_col(&t.state_disturbances, *d.state, k);
    if (d.action) append_col(&t.action_disturbances, *d.action, k);
    if (d.observation) append_col(&t.observation_disturbances, *d.observation, k);
    if (d.params) append_col(&t.param_disturbances, *d.params, k);
    t.terminal.push_back(false);
    try {
      x = wrap_angles(model.step(x, u, d, dt), model.position_kinds());
    } catch (const Error& e) {
      if (!dynamic_cast<const IntegrationError*>(&e) && !dynamic_cast<const ModelError*>(&e)) {
        throw;
      }
      // Drop the step that has no successor state.
      t.failed = true;
      t.state_rewards.pop_back();
      t.action_costs.pop_back();
      t.rewards.pop_back();
      t.terminal.pop_back();
      break;
    }
    t.states.col(k + 1) = x;
    t.time.push_back((k + 1) * dt);
  }
  // Trim to the recorded length after a blow-up: steps + 1 states.
  const int recorded = static_cast<int>(t.rewards.size());
  const int n_states = static_cast<int>(t.time.size());
  t.states.conservativeResize(Eigen::NoChange, n_states);
  t.actions.conservativeResize(Eigen::NoChange, recorded);
  for (Mat* m : {&t.state_disturbances, &t.action_disturbances,
                 &t.observation_disturbances, &t.param_disturbances}) {
    if (m->size() > 0) m->conservativeResize(Eigen::NoChange, recorded);
  }
  if (!t.terminal.empty()) t.terminal.back() = true;
  return t;
}

bool success(const RolloutTrace& trace, int pole_index, const SuccessCriteria& c) {
  if (trace.failed || trace.time.empty()) return false;
  const int dofs = static_cast<int>(trace.states.rows()) / 2;
  const double end = trace.time.back();
  if (end + 1e-9 < c.hold_time) return false;
  for (std::size_t k = 0; k < trace.time.size(); ++k) {
    if (trace.time[k] + 1e-9 < end - c.hold_time) continue;
    const double angle = wrap_angle(trace.states(pole_index, k));
    const double rate = trace.states(dofs + pole_index, k);
    if (std::abs(angle) > c.angle_tol || std::abs(rate) > c.rate_tol) return false;
  }
  return true;
}

Summary summarize(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("summary of an empty set");
  Summary s;
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / n;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / n);
  s.band_low = s.mean - 2.0 * s.std;
  s.band_high = s.mean + 2.0 * s.std;
  std::sort(values.begin(), values.end());
  s.p25 = percentile(values, 0.25);
  s.p50 = percentile(values, 0.50);
  s.p75 = percentile(values, 0.75);
  return s;
}

RewardStats reward_stats(const std::vector<RolloutTrace>& traces, int pole_index,
                         const SuccessCriteria& criteria) {
  if (traces.empty()) throw std::invalid_argument("reward_stats needs at least one trace");
  std::vector<double> total, state, action;
  RewardStats r;
  r.episodes = static_cast<int>(traces.size());
  int ok = 0;
  for (const auto& t : traces) {
    total.push_back(t.discounted_return());
    state.push_back(t.discounted_state_return());
    action.push_back(-t.discounted_action_cost());
    if (success(t, pole_index, criteria)) ++ok;
    if (t.failed) ++r.failures;
  }
  r.total = summarize(total);
  r.state = summarize(state);
  r.action = summarize(action);
  r.success_rate = static_cast<double>(ok) / r.episodes;
  return r;
}

std::vector<RolloutTrace> evaluate_policy(const Problem& problem, const ValueEnsemble& ens,
                                          const TrainConfig& train,
                                          const EvalOptions& options) {
  if (options.episodes < 1) throw ConfigError("episodes must be >= 1");
  const AdversarySet set = options.mode == DisturbanceMode::kNone
                               ? AdversarySet{}
                               : train.adversary.to_set(problem.model());
  std::vector<RolloutTrace> traces(options.episodes);
  parallel_chunks(
      static_cast<std::size_t>(options.episodes), 1,
      [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
          Rng init = make_rng(options.seed, stream::kEval, i);
          Rng dist = make_rng(options.seed, stream::kDisturbance, i);
          const Vec x0 = sample_initial_state(problem.model(), options.jitter, init);
          traces[i] = rollout(problem, ens, x0, options.duration, train.dt, train.rho,
                              options.mode, set, &dist);
        }
      },
      options.threads);
  return traces;
}

std::string sweep_axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::kBeta:
      return "beta";
    case SweepAxis::kStateAlpha:
      return "state_alpha";
    case SweepAxis::kActionAlpha:
      return "action_alpha";
    case SweepAxis::kObservationAlpha:
      return "observation_alpha";
    case SweepAxis::kModelFraction:
      return "model_fraction";
    case SweepAxis::kArchitecture:
      return "architecture";
  }
  return "beta";
}

SweepAxis parse_sweep_axis(const std::string& name) {
  for (auto a : {SweepAxis::kBeta, SweepAxis::kStateAlpha, SweepAxis::kActionAlpha,
                 SweepAxis::kObservationAlpha, SweepAxis::kModelFraction,
                 SweepAxis::kArchitecture}) {
    if (sweep_axis_name(a) == name) return a;
  }
  throw ConfigError("unknown sweep axis '" + name + "'");
}

TrainSetup apply_axis(const TrainSetup& base, SweepAxis axis, const std::string& value) {
  TrainSetup s = base;
  if (axis == SweepAxis::kArchitecture) {
    s.net.architecture = value;
    return s;
  }
  double v = 0.0;
  try {
    std::size_t used = 0;
    v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
  } catch (const std::exception&) {
    throw ConfigError("sweep value '" + value + "' is not a number");
  }
  switch (axis) {
    case SweepAxis::kBeta:
      s.train.beta = v;
      break;
    case SweepAxis::kStateAlpha:
      s.train.adversary.enabled = true;
      s.train.adversary.state_alpha = v;
      break;
    case SweepAxis::kActionAlpha:
      s.train.adversary.enabled = true;
      s.train.adversary.action_alpha = v;
      break;
    case SweepAxis::kObservationAlpha:
      s.train.adversary.enabled = true;
      s.train.adversary.observation_alpha = v;
      break;
    case SweepAxis::kModelFraction:
      s.train.adversary.enabled = true;
      s.train.adversary.model_fraction = v;
      break;
    case SweepAxis::kArchitecture:
      break;
  }
  return s;
}

int iterations_to_success(const std::vector<CurveRecord>& curve) {
  for (const auto& r : curve) {
    if (r.success_rate >= 1.0) return r.iteration;
  }
  return -1;
}

std::vector<SweepRun> ablation_sweep(
    const TrainSetup& base, SweepAxis axis, const std::vector<std::string>& values,
    const std::vector<std::uint64_t>& seeds,
    const std::function<SweepRun(const TrainSetup&, const std::string&, std::uint64_t)>& run) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  if (seeds.empty()) throw ConfigError("sweep needs at least one seed");
  std::vector<SweepRun> runs;
  for (const auto& value : values) {
    for (std::uint64_t seed : seeds) {
      SweepRun r;
      r.value = value;
      r.seed = seed;
      try {
        TrainSetup s = apply_axis(base, axis, value);
        s.train.seed = seed;
        if (run) {
          r = run(s, value, seed);
        } else {
          r.curve = train(s.problem, s.train, s.net, s.success).curve;
          r.ok = true;
        }
      } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
      }
      runs.push_back(std::move(r));
    }
  }
  return runs;
}

}  // namespace cfvi
