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


#include "cfvi/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "cfvi/checkpoint.hpp"
#include "cfvi/errors.hpp"
#include "cfvi/plot.hpp"

namespace cfvi {

namespace fs = std::filesystem;

namespace {

constexpr const char* kCurveHeader =
    "iteration,loss,mean_return,min_return,max_return,success_rate,dataset_size";

std::string hash_line(const std::string& hash) { return "# config_hash=" + hash + "\n"; }

std::string curve_row(const CurveRecord& r) {
  std::ostringstream os;
  os.precision(17);
  os << r.iteration << "," << r.loss << "," << r.mean_return << "," << r.min_return << ","
     << r.max_return << "," << r.success_rate << "," << r.dataset_size;
  return os.str();
}

std::string path_in(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

double parse_number(const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("sweep value '" + value + "' is not a number");
}

std::string dir_token(const std::string& value) {
  std::string out;
  for (char c : value) {
    const bool safe = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' ||
                      c == '+' || c == '_';
    out += safe ? c : '_';
  }
  return out;
}

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "invalid configuration: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const TrainingDivergence& e) {
    err << "training diverged at iteration " << e.iteration() << ": " << e.what() << "\n";
    return kExitFailure;
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

void write_reward_stats(const std::string& path, const std::string& hash,
                        const std::string& mode, const RewardStats& s) {
  std::ostringstream os;
  os.precision(17);
  os << hash_line(hash)
     << "mode,episodes,success_rate,failures,return_mean,return_std,return_p25,return_p50,"
        "return_p75,state_return_mean,state_return_std,action_cost_mean,action_cost_std\n"
     << mode << "," << s.episodes << "," << s.success_rate << "," << s.failures << ","
     << s.total.mean << "," << s.total.std << "," << s.total.p25 << "," << s.total.p50 << ","
     << s.total.p75 << "," << s.state.mean << "," << s.state.std << "," << s.action.mean
     << "," << s.action.std << "\n";
  write_file_atomic(path, os.str());
}

void write_traces(const std::string& path, const std::string& hash,
                  const std::vector<RolloutTrace>& traces, int nx, int nu) {
  std::ostringstream os;
  os.precision(17);
  os << hash_line(hash) << "episode,step,time";
  for (int i = 0; i < nx; ++i) os << ",x" << i;
  for (int i = 0; i < nu; ++i) os << ",u" << i;
  os << ",reward,state_reward,action_cost,terminal,failed\n";
  for (std::size_t e = 0; e < traces.size(); ++e) {
    const auto& t = traces[e];
    for (int k = 0; k <= t.steps(); ++k) {
      os << e << "," << k << "," << t.time[k];
      for (int i = 0; i < nx; ++i) os << "," << t.states(i, k);
      const bool has_action = k < t.steps();
      for (int i = 0; i < nu; ++i) {
        os << ",";
        if (has_action) os << t.actions(i, k);
      }
      if (has_action) {
        os << "," << t.rewards[k] << "," << t.state_rewards[k] << "," << t.action_costs[k]
           << "," << (t.terminal[k] ? 1 : 0);
      } else {
        os << ",,,,";
      }
      os << "," << (t.failed ? 1 : 0) << "\n";
    }
  }
  write_file_atomic(path, os.str());
}

// Long-format sweep curves grouped by value, averaged over seeds per iteration.
std::vector<CurveSeries> read_sweep_curves(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing sweep curves '" + path + "'");
  std::string line;
  bool header = false;
  std::vector<std::string> order;
  std::map<std::string, std::map<int, std::pair<CurveRecord, int>>> acc;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    std::stringstream ss(line);
    std::string value, seed, cell;
    std::getline(ss, value, ',');
    std::getline(ss, seed, ',');
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    if (v.size() != 7) throw Error(path + ": malformed row");
    if (!acc.count(value)) order.push_back(value);
    auto& [r, n] = acc[value][static_cast<int>(v[0])];
    r.iteration = static_cast<int>(v[0]);
    r.loss += v[1];
    r.mean_return += v[2];
    r.min_return += v[3];
    r.max_return += v[4];
    r.success_rate += v[5];
    r.dataset_size = static_cast<int>(v[6]);
    ++n;
  }
  if (order.empty()) throw Error(path + ": sweep curves have no data rows");
  std::vector<CurveSeries> out;
  for (const auto& value : order) {
    CurveSeries s{value, {}};
    for (auto [it, rn] : acc[value]) {
      auto [r, n] = rn;
      r.loss /= n;
      r.mean_return /= n;
      r.min_return /= n;
      r.max_return /= n;
      r.success_rate /= n;
      s.curve.push_back(r);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::pair<std::string, std::string> state_labels(const std::string& system) {
  if (system == "pendulum") return {"theta [rad]", "theta_dot [rad/s]"};
  if (system == "double_integrator") return {"position", "velocity"};
  return {"x0", "x1"};
}

std::string newest_checkpoint(const std::string& run_dir) {
  const fs::path final_path = fs::path(run_dir) / "final.ckpt";
  if (fs::exists(final_path)) return final_path.string();
  const fs::path dir = fs::path(run_dir) / "checkpoints";
  std::string best;
  if (fs::is_directory(dir)) {
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.path().extension() == ".ckpt" && e.path().string() > best) best = e.path().string();
    }
  }
  return best;
}

}  // namespace

std::string resolve_output_dir(const std::string& fallback, const RunOverrides& overrides) {
  if (overrides.out) return *overrides.out;
  if (const char* env = std::getenv("CFVI_OUT_DIR"); env && *env) return env;
  return fallback;
}

ExperimentConfig apply_sweep_value(const ExperimentConfig& base, const std::string& value,
                                   std::uint64_t seed) {
  ExperimentConfig c = base;
  c.train.seed = seed;
  auto& adv = c.train.adversary;
  switch (parse_sweep_axis(base.sweep.axis)) {
    case SweepAxis::kArchitecture:
      c.value_net.architecture = value;
      break;
    case SweepAxis::kBeta:
      c.train.beta = parse_number(value);
      break;
    case SweepAxis::kStateAlpha:
      adv.enabled = true;
      adv.state_alpha = parse_number(value);
      break;
    case SweepAxis::kActionAlpha:
      adv.enabled = true;
      adv.action_alpha = parse_number(value);
      break;
    case SweepAxis::kObservationAlpha:
      adv.enabled = true;
      adv.observation_alpha = parse_number(value);
      break;
    case SweepAxis::kModelFraction:
      adv.enabled = true;
      adv.model_fraction = parse_number(value);
      break;
  }
  c.sweep = {};
  validate(c);
  return c;
}

TrainResult run_training(const ExperimentConfig& config, const std::string& dir,
                         std::ostream& log) {
  fs::create_directories(fs::path(dir) / "checkpoints");
  fs::remove(fs::path(dir) / "done");
  ExperimentConfig echo = config;
  echo.output_dir = dir;
  const std::string hash = config_hash(config);
  write_file_atomic(path_in(dir, "config.json"), to_json(echo));

  std::ofstream curve(path_in(dir, "learning_curve.csv"), std::ios::trunc);
  std::ofstream timing(path_in(dir, "timing.csv"), std::ios::trunc);
  if (!curve || !timing) throw Error("cannot write CSV files in '" + dir + "'");
  curve << hash_line(hash) << kCurveHeader << "\n" << std::flush;
  timing << hash_line(hash) << "iteration,seconds\n" << std::flush;

  TrainCallbacks cb;
  cb.on_eval = [&](const CurveRecord& r, const ValueEnsemble& ens) {
    curve << curve_row(r) << "\n" << std::flush;
    char name[32];
    std::snprintf(name, sizeof name, "iter_%05d.ckpt", r.iteration);
    save_checkpoint((fs::path(dir) / "checkpoints" / name).string(), echo, ens, r.iteration);
    char line[160];
    std::snprintf(line, sizeof line,
                  "iteration %4d  loss %.4g  return %.3f [%.3f, %.3f]  success %.2f\n",
                  r.iteration, r.loss, r.mean_return, r.min_return, r.max_return,
                  r.success_rate);
    log << line << std::flush;
  };
  cb.on_timing = [&](int iteration, double seconds) {
    timing << iteration << "," << seconds << "\n" << std::flush;
  };

  const TrainSetup s = build_setup(config);
  TrainResult result = train(s.problem, s.train, s.net, s.success, cb);
  const int last = config.train.stop_on_success && !result.curve.empty()
                       ? result.curve.back().iteration
                       : config.train.iterations;
  save_checkpoint(path_in(dir, "final.ckpt"), echo, result.ensemble, last);
  write_file_atomic(path_in(dir, "done"), hash + "\n");
  return result;
}

int cmd_train(const std::string& config_path, const RunOverrides& overrides,
              std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    ExperimentConfig c = load_config(config_path);
    if (overrides.seed) c.train.seed = *overrides.seed;
    c.output_dir = resolve_output_dir(c.output_dir, overrides);
    out << "training " << c.system << " into " << c.output_dir << " (config "
        << config_hash(c) << ")\n";
    try {
      run_training(c, c.output_dir, out);
    } catch (const TrainingDivergence&) {
      err << "partial artifacts kept in " << c.output_dir << "\n";
      throw;
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_eval(const std::string& checkpoint_path, const std::string& eval_config_path,
             const RunOverrides& overrides, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Checkpoint ck = load_checkpoint(checkpoint_path);
    ExperimentConfig c = ck.config;
    if (!eval_config_path.empty()) {
      const ExperimentConfig e = load_config(eval_config_path);
      if (e.system != c.system) {
        throw ConfigError("field 'system': eval config is for '" + e.system +
                          "' but the checkpoint was trained on '" + c.system + "'");
      }
      c.eval = e.eval;
      c.success = e.success;
    }
    if (overrides.episodes) c.eval.episodes = *overrides.episodes;
    if (overrides.disturbance_mode) c.eval.mode = *overrides.disturbance_mode;
    if (overrides.seed) c.train.seed = *overrides.seed;
    validate(c);

    const Problem problem = build_eval_problem(c);
    TrainConfig train = c.train;
    if (c.eval.adversary) train.adversary = *c.eval.adversary;
    EvalOptions opts;
    opts.episodes = c.eval.episodes;
    opts.duration = c.eval.duration;
    opts.jitter = c.eval.jitter;
    opts.mode = parse_disturbance_mode(c.eval.mode);
    opts.seed = c.train.seed;
    opts.threads = c.train.threads;
    const auto traces = evaluate_policy(problem, ck.ensemble, train, opts);
    const RewardStats stats = reward_stats(traces, problem.model().pole_index(), c.success);

    const std::string dir = resolve_output_dir(
        (fs::path(checkpoint_path).parent_path() / ("eval_" + c.eval.mode)).string(),
        overrides);
    fs::create_directories(dir);
    const std::string hash = config_hash(c);
    write_file_atomic(path_in(dir, "eval_config.json"), to_json(c));
    write_reward_stats(path_in(dir, "reward_stats.csv"), hash, c.eval.mode, stats);
    write_traces(path_in(dir, "traces.csv"), hash, traces, problem.model().state_dim(),
                 problem.model().action_dim());

    char line[200];
    out << "checkpoint " << checkpoint_path << " (iteration " << ck.iteration << ")\n";
    std::snprintf(line, sizeof line, "%-11s %8s %8s %7s %20s %10s %10s\n", "mode", "episodes",
                  "success", "failed", "return (mean+-std)", "state", "action");
    out << line;
    std::snprintf(line, sizeof line, "%-11s %8d %7.1f%% %7d %11.3f +- %5.3f %10.3f %10.3f\n",
                  c.eval.mode.c_str(), stats.episodes, 100.0 * stats.success_rate,
                  stats.failures, stats.total.mean, stats.total.std, stats.state.mean,
                  stats.action.mean);
    out << line << "wrote " << dir << "\n";
    return static_cast<int>(kExitOk);
  });
}

int cmd_sweep(const std::string& config_path, const RunOverrides& overrides,
              std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    ExperimentConfig c = load_config(config_path);
    if (c.sweep.axis.empty()) throw ConfigError("field 'sweep.axis': required for a sweep");
    std::vector<std::uint64_t> seeds = c.sweep.seeds;
    if (overrides.seed) seeds = {*overrides.seed};
    if (seeds.empty()) seeds = {c.train.seed};
    c.output_dir = resolve_output_dir(c.output_dir, overrides);
    const std::string root = c.output_dir;
    fs::create_directories(root);
    write_file_atomic(path_in(root, "config.json"), to_json(c));

    auto run = [&](const TrainSetup&, const std::string& value, std::uint64_t seed) {
      SweepRun r;
      r.value = value;
      r.seed = seed;
      const ExperimentConfig sub = apply_sweep_value(c, value, seed);
      const std::string dir = (fs::path(root) / (c.sweep.axis + "_" + dir_token(value)) /
                               ("seed_" + std::to_string(seed)))
                                  .string();
      std::ifstream done(path_in(dir, "done"));
      std::string stamp;
      if (done && std::getline(done, stamp) && stamp == config_hash(sub)) {
        out << c.sweep.axis << "=" << value << " seed " << seed << ": done, skipping\n";
        r.curve = read_learning_curve(path_in(dir, "learning_curve.csv"));
      } else {
        out << c.sweep.axis << "=" << value << " seed " << seed << ": training\n";
        try {
          r.curve = run_training(sub, dir, out).curve;
        } catch (const std::exception& e) {
          err << c.sweep.axis << "=" << value << " seed " << seed << " failed: " << e.what()
              << "\n";
          throw;
        }
      }
      r.ok = true;
      return r;
    };
    const auto runs = ablation_sweep(build_setup(c), parse_sweep_axis(c.sweep.axis),
                                     c.sweep.values, seeds, run);

    const std::string hash = config_hash(c);
    std::ostringstream summary, curves;
    summary.precision(17);
    curves.precision(17);
    summary << hash_line(hash)
            << "axis,value,seed,ok,iterations_to_success,final_success_rate,"
               "final_mean_return,error\n";
    curves << hash_line(hash) << "value,seed," << kCurveHeader << "\n";
    bool all_ok = true;
    for (const auto& r : runs) {
      all_ok = all_ok && r.ok;
      std::string error = r.error;
      for (char& ch : error) {
        if (ch == ',' || ch == '\n') ch = ' ';
      }
      summary << c.sweep.axis << "," << r.value << "," << r.seed << "," << (r.ok ? 1 : 0)
              << "," << iterations_to_success(r.curve) << ",";
      if (r.curve.empty()) {
        summary << ",";
      } else {
        summary << r.curve.back().success_rate << "," << r.curve.back().mean_return;
      }
      summary << "," << error << "\n";
      for (const auto& rec : r.curve) {
        curves << r.value << "," << r.seed << "," << curve_row(rec) << "\n";
      }
    }
    write_file_atomic(path_in(root, "sweep_summary.csv"), summary.str());
    write_file_atomic(path_in(root, "sweep_curves.csv"), curves.str());
    out << "wrote " << root << "\n";
    if (!all_ok) {
      err << "some sweep runs failed; see sweep_summary.csv\n";
      return static_cast<int>(kExitFailure);
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_plot(const std::string& run_dir, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!fs::is_directory(run_dir)) throw Error("no run directory '" + run_dir + "'");
    const std::string sweep_csv = path_in(run_dir, "sweep_curves.csv");
    if (fs::exists(sweep_csv)) {
      const auto series = read_sweep_curves(sweep_csv);
      write_file_atomic(path_in(run_dir, "sweep_curves.svg"),
                        multi_curve_svg(series, "mean return per sweep value"));
      out << "wrote " << path_in(run_dir, "sweep_curves.svg") << "\n";
      return static_cast<int>(kExitOk);
    }
    const auto curve = read_learning_curve(path_in(run_dir, "learning_curve.csv"));
    write_file_atomic(path_in(run_dir, "learning_curve.svg"),
                      learning_curve_svg(curve, "learning curve"));
    out << "wrote " << path_in(run_dir, "learning_curve.svg") << "\n";

    const std::string ckpt = newest_checkpoint(run_dir);
    if (ckpt.empty()) {
      out << "no checkpoint; skipping heatmaps\n";
      return static_cast<int>(kExitOk);
    }
    const Checkpoint ck = load_checkpoint(ckpt);
    const TrainSetup s = build_setup(ck.config);
    if (s.problem.model().state_dim() != 2) {
      out << ck.config.system << " has more than two states; skipping heatmaps\n";
      return static_cast<int>(kExitOk);
    }
    const GridMaps g = value_grid(s.problem, ck.ensemble, 101);
    const auto [lx, ly] = state_labels(ck.config.system);
    write_file_atomic(path_in(run_dir, "value_grid.csv"), grid_csv(g, ck.config_hash));
    write_file_atomic(path_in(run_dir, "value_heatmap.svg"),
                      heatmap_svg(g.x0, g.x1, g.value, "value", lx, ly));
    write_file_atomic(path_in(run_dir, "policy_heatmap.svg"),
                      heatmap_svg(g.x0, g.x1, g.action, "action", lx, ly));
    out << "wrote value_grid.csv, value_heatmap.svg, policy_heatmap.svg\n";
    return static_cast<int>(kExitOk);
  });
}

}  // namespace cfvi
