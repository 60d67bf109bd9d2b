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

#include "cfvi/fvi.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cfvi/errors.hpp"
#include "cfvi/eval.hpp"
#include "cfvi/parallel.hpp"

namespace cfvi {
namespace {

constexpr std::size_t kTargetChunk = 64;

}  // namespace

Problem::Problem(std::shared_ptr<const ControlAffineModel> model,
                 ActionCostSpec action_cost, Vec state_cost)
    : model_(std::move(model)),
      action_cost_(std::move(action_cost)),
      state_cost_(std::move(state_cost)) {
  if (!model_) throw std::invalid_argument("problem needs a model");
  action_cost_.validate();
  if (action_cost_.dim() != model_->action_dim()) {
    throw ConfigError("action cost has " + std::to_string(action_cost_.dim()) +
                      " dimensions, model has " +
                      std::to_string(model_->action_dim()));
  }
  features_ = FeatureTransform(
      {model_->position_kinds().begin(), model_->position_kinds().end()});
  if (state_cost_.size() != features_.feature_dim()) {
    throw ConfigError("state cost needs " + std::to_string(features_.feature_dim()) +
                      " weights (one per feature)");
  }
  if ((state_cost_.array() < 0.0).any() || !state_cost_.allFinite()) {
    throw ConfigError("state cost weights must be finite and >= 0");
  }
  z_des_ = features_.apply(model_->desired_state());
}

double Problem::state_reward(const Vec& x) const {
  const Vec r = features_.apply(x) - z_des_;
  return -r.dot(state_cost_.asDiagonal() * r);
}

double Problem::reward(const Vec& x, const Vec& u) const {
  return state_reward(x) - cost(action_cost_, u);
}

Vec Problem::policy(const Vec& x, const Vec& grad_v) const {
  return policy_shape(action_cost_, model_->control_matrix(x).transpose() * grad_v);
}

Vec Problem::policy(const ValueEnsemble& ens, const Vec& x) const {
  return policy(x, ens.gradient(x));
}

Vec Problem::project(const Vec& x) const {
  Vec y = wrap_angles(x, model_->position_kinds());
  const Bounds& d = model_->domain();
  const auto n = static_cast<Eigen::Index>(model_->position_kinds().size());
  for (Eigen::Index i = n; i < y.size(); ++i) y[i] = std::clamp(y[i], d.lower[i], d.upper[i]);
  return y;
}

AdversarySet AdversaryConfig::to_set(const ControlAffineModel& model) const {
  AdversarySet set;
  if (!enabled) return set;
  set.state = EnergyBall{state_alpha};
  set.action = EnergyBall{action_alpha};
  set.observation = EnergyBall{observation_alpha};
  set.model = AmplitudeBox::relative(model.params(), model_fraction);
  return set;
}

double TrainConfig::gamma() const { return std::exp(-rho * dt); }
double TrainConfig::lambda() const { return std::exp(-beta * dt); }
double TrainConfig::horizon() const { return -std::log(1e-4) / beta; }

int TrainConfig::horizon_steps() const {
  // The small slack keeps T an exact multiple of dt from rounding up.
  return std::max(1, static_cast<int>(std::ceil(horizon() / dt - 1e-9)));
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(rho > 0.0 && std::isfinite(rho), "train.rho must be > 0");
  require(dt > 0.0 && std::isfinite(dt), "train.dt must be > 0");
  require(beta > 0.0 && std::isfinite(beta), "train.beta must be > 0");
  require(iterations >= 0, "train.iterations must be >= 0");
  require(eval_cadence >= 1, "train.eval_cadence must be >= 1");
  require(eval_episodes >= 1, "train.eval_episodes must be >= 1");
  require(eval_duration > 0.0, "train.eval_duration must be > 0");
  require(init_jitter >= 0.0, "train.init_jitter must be >= 0");
  require(dataset.mode == "dp" || dataset.mode == "rtdp",
          "train.dataset.mode must be 'dp' or 'rtdp'");
  require(dataset.n_samples >= 1, "train.dataset.n_samples must be >= 1");
  require(dataset.buffer_capacity >= 1, "train.dataset.buffer_capacity must be >= 1");
  require(dataset.n_rollouts >= 0, "train.dataset.n_rollouts must be >= 0");
  require(dataset.rollout_duration >= 0.0, "train.dataset.rollout_duration must be >= 0");
  require(dataset.exploration_scale >= 0.0, "train.dataset.exploration_scale must be >= 0");
  require(dataset.exploration_sigma >= 0.0, "train.dataset.exploration_sigma must be >= 0");
  require(fit.epochs >= 1, "train.fit.epochs must be >= 1");
  require(fit.batch_size >= 1, "train.fit.batch_size must be >= 1");
  require(fit.learning_rate > 0.0, "train.fit.learning_rate must be > 0");
  require(fit.p >= 1.0, "train.fit.p must be >= 1");
  const auto& a = adversary;
  require(a.state_alpha >= 0.0 && a.action_alpha >= 0.0 && a.observation_alpha >= 0.0 &&
              a.model_fraction >= 0.0 && a.wiener_sigma >= 0.0,
          "adversary sizes must be >= 0");
}

KernelWeights KernelWeights::make(double beta, double dt) {
  // m[j] = int_0^1 c exp(-c s) s^j ds with c = beta dt.
  const double c = beta * dt;
  double m[4];
  if (c > 2.0) {
    m[0] = -std::expm1(-c);
    for (int j = 1; j < 4; ++j) m[j] = -std::exp(-c) + j / c * m[j - 1];
  } else {
    for (int j = 0; j < 4; ++j) {
      double term = c, sum = 0.0;
      for (int n = 0; n < 80; ++n) {
        sum += term / (n + j + 1);
        term *= -c / (n + 1);
      }
      m[j] = sum;
    }
  }
  KernelWeights w;
  w.r0 = 2.0 * m[3] - 3.0 * m[2] + m[0];
  w.d0 = m[3] - 2.0 * m[2] + m[1];
  w.r1 = -2.0 * m[3] + 3.0 * m[2];
  w.d1 = m[3] - m[2];
  w.decay = std::exp(-c);
  return w;
}

TargetBatch compute_value_targets(const Problem& problem, const ValueEnsemble& ens,
                                  const TrainConfig& config, const Mat& x0,
                                  const TargetOptions& options) {
  config.validate();
  const ControlAffineModel& model = problem.model();
  if (x0.rows() != model.state_dim()) {
    throw std::invalid_argument("target states have the wrong dimension");
  }
  const int n = static_cast<int>(x0.cols());
  const int horizon = config.horizon_steps();
  const double gamma = config.gamma(), dt = config.dt, rho = config.rho;
  const double half_gamma = std::exp(-0.5 * rho * dt);
  const KernelWeights kw = KernelWeights::make(config.beta, dt);
  const AdversarySet set = config.adversary.to_set(model);
  const bool modulate = config.adversary.enabled && config.adversary.wiener_sigma > 0.0;

  TargetBatch out;
  out.states = x0;
  out.targets = Vec::Zero(n);
  if (options.keep_returns) out.returns = Mat::Zero(horizon, n);

  parallel_chunks(
      static_cast<std::size_t>(n), kTargetChunk,
      [&](std::size_t begin, std::size_t end) {
        const int b = static_cast<int>(begin);
        const int m = static_cast<int>(end - begin);
        std::vector<WienerModulation> mods;
        std::vector<Rng> rngs;
        if (modulate) {
          for (int j = 0; j < m; ++j) {
            const std::uint64_t index =
                (static_cast<std::uint64_t>(options.iteration) << 32) ^
                (options.index_offset + static_cast<std::uint64_t>(b + j));
            rngs.push_back(make_rng(options.seed, stream::kModulation, index));
            const double level = std::uniform_real_distribution<double>(0.0, 1.0)(rngs.back());
            mods.emplace_back(config.adversary.wiener_sigma, level);
          }
        }
        Mat x = x0.middleCols(b, m);
        Mat grads, end_grads;
        Vec v = ens.values_and_gradients(x, &grads);
        Vec prefix = Vec::Zero(m), target = Vec::Zero(m);
        Mat y(x.rows(), m), f(x.rows(), m), next(x.rows(), m);
        Vec r1(m);
        double discount = 1.0;  // gamma^k
        double weight = 1.0;    // exp(-beta k dt)
        for (int k = 0; k < horizon; ++k) {
          // Euler step with the action held; between grid points the state
          // moves on the straight line x + t f.
          Vec ret0(m), slope0(m);
          for (int j = 0; j < m; ++j) {
            const Vec xj = x.col(j);
            const Vec gj = grads.col(j);
            const Vec u = problem.policy(xj, gj);
            DisturbanceBundle d;
            if (config.adversary.enabled) {
              double scale = 1.0;
              if (modulate) {
                scale = mods[j].level();
                mods[j].advance(dt, rngs[j]);
              }
              d = worst_case_disturbance(model, set, xj, u, gj, scale);
            }
            const Vec yj = model.step(xj, u, d, dt);
            const Vec fj = (yj - xj) / dt;
            y.col(j) = yj;
            f.col(j) = fj;
            const double ra = problem.reward(xj, u);
            const double rm = problem.reward(Vec(xj + 0.5 * dt * fj), u);
            r1[j] = problem.reward(yj, u);
            ret0[j] = prefix[j] + discount * v[j];
            slope0[j] = discount * (ra + gj.dot(fj) - rho * v[j]);
            prefix[j] += discount * dt / 6.0 * (ra + 4.0 * half_gamma * rm + gamma * r1[j]);
            next.col(j) = problem.project(yj);
          }
          // Value at the end of the step (left limit), then at the projected
          // state that starts the next one.
          const Vec v_end = ens.values_and_gradients(y, &end_grads);
          Vec v_next = v_end;
          Mat next_grads = end_grads;
          std::vector<Eigen::Index> moved;
          for (int j = 0; j < m; ++j) {
            if (next.col(j) != y.col(j)) moved.push_back(j);
          }
          if (!moved.empty()) {
            Mat xm(x.rows(), static_cast<Eigen::Index>(moved.size()));
            for (std::size_t i = 0; i < moved.size(); ++i) xm.col(i) = next.col(moved[i]);
            Mat gm;
            const Vec vm = ens.values_and_gradients(xm, &gm);
            for (std::size_t i = 0; i < moved.size(); ++i) {
              v_next[moved[i]] = vm[i];
              next_grads.col(moved[i]) = gm.col(i);
            }
          }
          discount *= gamma;
          for (int j = 0; j < m; ++j) {
            const double ret1 = prefix[j] + discount * v_end[j];
            const double slope1 =
                discount * (r1[j] + end_grads.col(j).dot(f.col(j)) - rho * v_end[j]);
            target[j] += weight * (kw.r0 * ret0[j] + kw.d0 * dt * slope0[j] +
                                   kw.r1 * ret1 + kw.d1 * dt * slope1);
          }
          weight *= kw.decay;
          x = next;
          v = v_next;
          grads = next_grads;
          if (options.keep_returns) {
            out.returns.block(k, b, 1, m) = (prefix + discount * v).transpose();
          }
        }
        target += weight * (prefix + discount * v);
        out.targets.segment(b, m) = target;
      },
      config.threads);
  return out;
}

Mat dp_dataset(const ControlAffineModel& model, int n, Rng& rng) {
  const Bounds& d = model.domain();
  if (!d.lower.allFinite() || !d.upper.allFinite()) {
    throw ConfigError("state domain must be bounded for DP sampling");
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Mat x(model.state_dim(), n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < model.state_dim(); ++i) {
      x(i, j) = d.lower[i] + unit(rng) * (d.upper[i] - d.lower[i]);
    }
  }
  return x;
}

Vec sample_initial_state(const ControlAffineModel& model, double jitter, Rng& rng) {
  const int pole = model.pole_index();
  if (model.position_kinds()[pole] != JointKind::kContinuous) {
    Mat x = dp_dataset(model, 1, rng);
    return x.col(0);
  }
  std::uniform_real_distribution<double> u(-jitter, jitter);
  Vec x = model.desired_state();
  x[pole] = std::numbers::pi;
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += u(rng);
  return wrap_angles(x, model.position_kinds());
}

ReplayBuffer::ReplayBuffer(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw std::invalid_argument("buffer capacity must be >= 1");
}

void ReplayBuffer::add(const Vec& x) {
  states_.push_back(x);
  if (static_cast<int>(states_.size()) > capacity_) states_.pop_front();
}

void ReplayBuffer::add(const Mat& xs) {
  for (Eigen::Index j = 0; j < xs.cols(); ++j) add(Vec(xs.col(j)));
}

Mat ReplayBuffer::states() const {
  if (states_.empty()) return {};
  Mat x(states_.front().size(), size());
  for (int j = 0; j < size(); ++j) x.col(j) = states_[j];
  return x;
}

void rtdp_collect(const Problem& problem, const ValueEnsemble& ens,
                  const TrainConfig& config, ReplayBuffer* buffer, Rng& rng) {
  const ControlAffineModel& model = problem.model();
  const auto& ds = config.dataset;
  const int steps = static_cast<int>(std::llround(ds.rollout_duration / config.dt));
  const int n = ds.n_rollouts;
  if (n == 0 || steps == 0) return;
  const int nu = model.action_dim();
  Mat x(model.state_dim(), n);
  std::vector<WienerModulation> noise;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int j = 0; j < n; ++j) {
    x.col(j) = sample_initial_state(model, config.init_jitter, rng);
    for (int a = 0; a < nu; ++a) noise.emplace_back(ds.exploration_sigma, unit(rng));
  }
  std::vector<bool> alive(n, true);
  Mat grads;
  for (int k = 0; k < steps; ++k) {
    ens.values_and_gradients(x, &grads);
    for (int j = 0; j < n; ++j) {
      if (!alive[j]) continue;
      buffer->add(Vec(x.col(j)));
      Vec u = problem.policy(x.col(j), grads.col(j));
      for (int a = 0; a < nu; ++a) {
        auto& w = noise[j * nu + a];
        u[a] += ds.exploration_scale * (2.0 * w.level() - 1.0);
        if (ds.exploration_sigma > 0.0) w.advance(config.dt, rng);
      }
      try {
        x.col(j) = problem.project(model.step(x.col(j), u, config.dt));
      } catch (const IntegrationError&) {
        alive[j] = false;
      } catch (const ModelError&) {
        alive[j] = false;
      }
    }
  }
}

TrainResult train(const Problem& problem, const TrainConfig& config,
                  const ValueNetConfig& net, const SuccessCriteria& success,
                  const TrainCallbacks& callbacks) {
  config.validate();
  const ControlAffineModel& model = problem.model();
  TrainResult result{ValueEnsemble(problem.features(), model.desired_state(), net,
                                   config.seed),
                     {}};
  ValueEnsemble& ens = result.ensemble;
  AdamState adam;
  const bool rtdp = config.dataset.mode == "rtdp";
  Mat data;
  ReplayBuffer buffer(config.dataset.buffer_capacity);
  Rng explore = make_rng(config.seed, stream::kExploration);
  if (!rtdp) {
    Rng rng = make_rng(config.seed, stream::kDataset);
    data = dp_dataset(model, config.dataset.n_samples, rng);
  }
  EvalOptions eval;
  eval.episodes = config.eval_episodes;
  eval.duration = config.eval_duration;
  eval.jitter = config.init_jitter;
  eval.seed = config.seed;
  eval.threads = config.threads;

  for (int it = 1; it <= config.iterations; ++it) {
    const auto start = std::chrono::steady_clock::now();
    if (rtdp) {
      rtdp_collect(problem, ens, config, &buffer, explore);
      data = buffer.states();
      if (data.cols() == 0) throw ConfigError("RTDP collected no states");
    }
    TargetOptions opts;
    opts.seed = config.seed;
    opts.iteration = it;
    const TargetBatch batch = compute_value_targets(problem, ens, config, data, opts);
    if (!batch.targets.allFinite()) {
      throw TrainingDivergence("non-finite value targets", it);
    }
    Rng fit_rng = make_rng(config.seed, stream::kFit, static_cast<std::uint64_t>(it));
    const double loss = ens.fit(data, batch.targets, config.fit, &adam, fit_rng, it);

    if (it % config.eval_cadence == 0 || it == config.iterations) {
      const auto traces = evaluate_policy(problem, ens, config, eval);
      const RewardStats stats = reward_stats(traces, model.pole_index(), success);
      CurveRecord rec;
      rec.iteration = it;
      rec.loss = loss;
      rec.mean_return = stats.total.mean;
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (const auto& t : traces) {
        lo = std::min(lo, t.discounted_return());
        hi = std::max(hi, t.discounted_return());
      }
      rec.min_return = lo;
      rec.max_return = hi;
      rec.success_rate = stats.success_rate;
      rec.dataset_size = static_cast<int>(data.cols());
      result.curve.push_back(rec);
      if (callbacks.on_eval) callbacks.on_eval(rec, ens);
    }
    if (callbacks.on_timing) {
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
      callbacks.on_timing(it, elapsed.count());
    }
    if (config.stop_on_success && !result.curve.empty() &&
        result.curve.back().iteration == it && result.curve.back().success_rate >= 1.0) {
      break;
    }
  }
  return result;
}

}  // namespace cfvi
