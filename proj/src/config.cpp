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


#include "cfvi/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cfvi/errors.hpp"

namespace cfvi {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void field_error(const std::string& path, const std::string& what) {
  throw ConfigError("field '" + path + "': " + what);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void read(const Json& j, const std::string& path, double& out) {
  if (!j.is_number()) field_error(path, "expected a number");
  out = j.get<double>();
}

void read(const Json& j, const std::string& path, int& out) {
  if (!j.is_number_integer()) field_error(path, "expected an integer");
  const auto v = j.get<long long>();
  if (v < INT32_MIN || v > INT32_MAX) field_error(path, "integer out of range");
  out = static_cast<int>(v);
}

void read(const Json& j, const std::string& path, unsigned& out) {
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    field_error(path, "expected a non-negative integer");
  }
  out = static_cast<unsigned>(j.get<long long>());
}

void read(const Json& j, const std::string& path, std::uint64_t& out) {
  if (j.is_number_unsigned()) {
    out = j.get<std::uint64_t>();
  } else if (j.is_number_integer() && j.get<long long>() >= 0) {
    out = static_cast<std::uint64_t>(j.get<long long>());
  } else {
    field_error(path, "expected a non-negative integer");
  }
}

void read(const Json& j, const std::string& path, bool& out) {
  if (!j.is_boolean()) field_error(path, "expected true or false");
  out = j.get<bool>();
}

void read(const Json& j, const std::string& path, std::string& out) {
  if (!j.is_string()) field_error(path, "expected a string");
  out = j.get<std::string>();
}

template <typename T>
void read(const Json& j, const std::string& path, std::vector<T>& out) {
  if (!j.is_array()) field_error(path, "expected an array");
  out.clear();
  for (std::size_t i = 0; i < j.size(); ++i) {
    T v{};
    read(j[i], path + "[" + std::to_string(i) + "]", v);
    out.push_back(std::move(v));
  }
}

void read(const Json& j, const std::string& path, ParamOverrides& out) {
  if (!j.is_object()) field_error(path, "expected an object");
  out.clear();
  for (const auto& [key, value] : j.items()) {
    read(value, join(path, key), out[key]);
  }
}

// Reads known keys of one object and rejects the rest.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) field_error(path_.empty() ? "<root>" : path_, "expected an object");
  }

  template <typename T>
  Section& get(const std::string& key, T& out) {
    seen_.insert(key);
    if (auto it = j_.find(key); it != j_.end()) read(*it, join(path_, key), out);
    return *this;
  }

  const Json* child(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string path(const std::string& key) const { return join(path_, key); }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) field_error(join(path_, key), "unknown field");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// Numbers in sweep values are kept in their JSON spelling.
void read_values(const Json& j, const std::string& path, std::vector<std::string>& out) {
  if (!j.is_array()) field_error(path, "expected an array");
  out.clear();
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].is_string()) {
      out.push_back(j[i].get<std::string>());
    } else if (j[i].is_number()) {
      out.push_back(j[i].dump());
    } else {
      field_error(path + "[" + std::to_string(i) + "]", "expected a string or number");
    }
  }
}

void read_adversary(const Json& j, const std::string& path, AdversaryConfig& a) {
  Section s(j, path);
  s.get("enabled", a.enabled)
      .get("state_alpha", a.state_alpha)
      .get("action_alpha", a.action_alpha)
      .get("observation_alpha", a.observation_alpha)
      .get("model_fraction", a.model_fraction)
      .get("wiener_sigma", a.wiener_sigma)
      .finish();
}

Json adversary_json(const AdversaryConfig& a) {
  return {{"enabled", a.enabled},
          {"state_alpha", a.state_alpha},
          {"action_alpha", a.action_alpha},
          {"observation_alpha", a.observation_alpha},
          {"model_fraction", a.model_fraction},
          {"wiener_sigma", a.wiener_sigma}};
}

ExperimentConfig from_json(const Json& root) {
  ExperimentConfig c;
  Section top(root, "");
  top.get("system", c.system)
      .get("model_overrides", c.model_overrides)
      .get("state_cost", c.state_cost)
      .get("output_dir", c.output_dir)
      .get("seed", c.train.seed);

  if (const Json* j = top.child("action_cost")) {
    Section s(*j, "action_cost");
    auto& a = c.action_cost;
    s.get("family", a.family)
        .get("action_scale", a.action_scale)
        .get("cost_scale", a.cost_scale)
        .get("action_shift", a.action_shift)
        .get("R", a.R)
        .finish();
  }
  if (const Json* j = top.child("adversary")) read_adversary(*j, "adversary", c.train.adversary);
  if (const Json* j = top.child("train")) {
    Section s(*j, "train");
    auto& t = c.train;
    s.get("rho", t.rho)
        .get("dt", t.dt)
        .get("beta", t.beta)
        .get("iterations", t.iterations)
        .get("eval_cadence", t.eval_cadence)
        .get("eval_episodes", t.eval_episodes)
        .get("eval_duration", t.eval_duration)
        .get("init_jitter", t.init_jitter)
        .get("threads", t.threads)
        .get("stop_on_success", t.stop_on_success);
    if (const Json* d = s.child("dataset")) {
      Section ds(*d, "train.dataset");
      auto& x = t.dataset;
      ds.get("mode", x.mode)
          .get("n_samples", x.n_samples)
          .get("buffer_capacity", x.buffer_capacity)
          .get("n_rollouts", x.n_rollouts)
          .get("rollout_duration", x.rollout_duration)
          .get("exploration_scale", x.exploration_scale)
          .get("exploration_sigma", x.exploration_sigma)
          .finish();
    }
    if (const Json* f = s.child("fit")) {
      Section fs(*f, "train.fit");
      fs.get("epochs", t.fit.epochs)
          .get("batch_size", t.fit.batch_size)
          .get("learning_rate", t.fit.learning_rate)
          .get("p", t.fit.p)
          .finish();
    }
    s.finish();
  }
  if (const Json* j = top.child("value_net")) {
    Section s(*j, "value_net");
    auto& n = c.value_net;
    std::string activation = activation_name(n.activation);
    s.get("architecture", n.architecture)
        .get("ensemble", n.ensemble)
        .get("hidden", n.hidden)
        .get("activation", activation)
        .get("diag_eps", n.diag_eps)
        .get("zero_output", n.zero_output)
        .finish();
    try {
      n.activation = parse_activation(activation);
    } catch (const std::exception&) {
      field_error("value_net.activation", "unknown activation '" + activation + "'");
    }
  }
  if (const Json* j = top.child("success")) {
    Section s(*j, "success");
    s.get("angle_tol", c.success.angle_tol)
        .get("rate_tol", c.success.rate_tol)
        .get("hold_time", c.success.hold_time)
        .finish();
  }
  if (const Json* j = top.child("eval")) {
    Section s(*j, "eval");
    auto& e = c.eval;
    s.get("episodes", e.episodes)
        .get("duration", e.duration)
        .get("jitter", e.jitter)
        .get("mode", e.mode)
        .get("model_overrides", e.model_overrides);
    if (const Json* adv = s.child("adversary"); adv && !adv->is_null()) {
      e.adversary.emplace();
      read_adversary(*adv, "eval.adversary", *e.adversary);
    }
    s.finish();
  }
  if (const Json* j = top.child("sweep")) {
    Section s(*j, "sweep");
    s.get("axis", c.sweep.axis).get("seeds", c.sweep.seeds);
    if (const Json* v = s.child("values")) read_values(*v, "sweep.values", c.sweep.values);
    s.finish();
  }
  top.finish();
  return c;
}

Json to_json_value(const ExperimentConfig& c) {
  Json j;
  j["system"] = c.system;
  j["model_overrides"] = Json::object();
  for (const auto& [k, v] : c.model_overrides) j["model_overrides"][k] = v;
  const auto& a = c.action_cost;
  j["action_cost"] = {{"family", a.family},
                      {"action_scale", a.action_scale},
                      {"cost_scale", a.cost_scale},
                      {"action_shift", a.action_shift},
                      {"R", a.R}};
  j["state_cost"] = c.state_cost;
  j["adversary"] = adversary_json(c.train.adversary);
  const auto& t = c.train;
  j["train"] = {{"rho", t.rho},
                {"dt", t.dt},
                {"beta", t.beta},
                {"iterations", t.iterations},
                {"eval_cadence", t.eval_cadence},
                {"eval_episodes", t.eval_episodes},
                {"eval_duration", t.eval_duration},
                {"init_jitter", t.init_jitter},
                {"threads", t.threads},
                {"stop_on_success", t.stop_on_success},
                {"dataset",
                 {{"mode", t.dataset.mode},
                  {"n_samples", t.dataset.n_samples},
                  {"buffer_capacity", t.dataset.buffer_capacity},
                  {"n_rollouts", t.dataset.n_rollouts},
                  {"rollout_duration", t.dataset.rollout_duration},
                  {"exploration_scale", t.dataset.exploration_scale},
                  {"exploration_sigma", t.dataset.exploration_sigma}}},
                {"fit",
                 {{"epochs", t.fit.epochs},
                  {"batch_size", t.fit.batch_size},
                  {"learning_rate", t.fit.learning_rate},
                  {"p", t.fit.p}}}};
  const auto& n = c.value_net;
  j["value_net"] = {{"architecture", n.architecture},
                    {"ensemble", n.ensemble},
                    {"hidden", n.hidden},
                    {"activation", activation_name(n.activation)},
                    {"diag_eps", n.diag_eps},
                    {"zero_output", n.zero_output}};
  j["success"] = {{"angle_tol", c.success.angle_tol},
                  {"rate_tol", c.success.rate_tol},
                  {"hold_time", c.success.hold_time}};
  j["eval"] = {{"episodes", c.eval.episodes},
               {"duration", c.eval.duration},
               {"jitter", c.eval.jitter},
               {"mode", c.eval.mode},
               {"model_overrides", Json::object()}};
  for (const auto& [k, v] : c.eval.model_overrides) j["eval"]["model_overrides"][k] = v;
  j["eval"]["adversary"] = c.eval.adversary ? adversary_json(*c.eval.adversary) : Json();
  j["sweep"] = {{"axis", c.sweep.axis},
                {"values", c.sweep.values},
                {"seeds", c.sweep.seeds}};
  j["output_dir"] = c.output_dir;
  j["seed"] = c.train.seed;
  return j;
}

std::string location(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return std::to_string(line) + ":" + std::to_string(col);
}

std::shared_ptr<const ControlAffineModel> model_for(const std::string& system,
                                                    const ParamOverrides& overrides,
                                                    const std::string& field) {
  try {
    return make_model(system, overrides);
  } catch (const ConfigError& e) {
    field_error(field, e.what());
  } catch (const ModelError& e) {
    field_error(field, e.what());
  }
}

std::vector<JointKind> kinds_of(const ControlAffineModel& model) {
  const auto k = model.position_kinds();
  return {k.begin(), k.end()};
}

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) field_error(field, what);
}

void validate_adversary(const AdversaryConfig& a, const std::string& path) {
  require(a.state_alpha >= 0.0, path + ".state_alpha", "must be >= 0");
  require(a.action_alpha >= 0.0, path + ".action_alpha", "must be >= 0");
  require(a.observation_alpha >= 0.0, path + ".observation_alpha", "must be >= 0");
  require(a.model_fraction >= 0.0, path + ".model_fraction", "must be >= 0");
  require(a.wiener_sigma >= 0.0, path + ".wiener_sigma", "must be >= 0");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::string msg = e.what();
    if (auto p = msg.find(": "); p != std::string::npos) msg = msg.substr(p + 2);
    // The library reports the byte after the offending token.
    const std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
    throw ConfigError(source + ":" + location(text, byte) + ": " + msg);
  }
  ExperimentConfig c = from_json(root);
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string to_json(const ExperimentConfig& config) {
  return to_json_value(config).dump(2) + "\n";
}

std::string config_hash(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  c.output_dir.clear();
  c.train.threads = 0;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void validate(const ExperimentConfig& c) {
  const auto names = model_names();
  if (std::find(names.begin(), names.end(), c.system) == names.end()) {
    std::string known;
    for (const auto& n : names) known += (known.empty() ? "" : ", ") + n;
    field_error("system", "unknown system '" + c.system + "' (known: " + known + ")");
  }
  const auto model = model_for(c.system, c.model_overrides, "model_overrides");
  model_for(c.system, c.eval.model_overrides, "eval.model_overrides");
  const int m = model->action_dim();

  const auto& a = c.action_cost;
  CostFamily family;
  try {
    family = parse_family(a.family);
  } catch (const std::exception&) {
    field_error("action_cost.family", "unknown cost family '" + a.family + "'");
  }
  require(a.action_scale.empty() || static_cast<int>(a.action_scale.size()) == m,
          "action_cost.action_scale", "expected " + std::to_string(m) + " entries");
  require(a.action_shift.empty() || static_cast<int>(a.action_shift.size()) == m,
          "action_cost.action_shift", "expected " + std::to_string(m) + " entries");
  if (!a.R.empty()) {
    require(family == CostFamily::kLinear, "action_cost.R", "only used by the linear family");
    bool square = static_cast<int>(a.R.size()) == m;
    for (const auto& row : a.R) square = square && static_cast<int>(row.size()) == m;
    require(square, "action_cost.R",
            "expected a " + std::to_string(m) + "x" + std::to_string(m) + " matrix");
  }
  try {
    build_action_cost(a, m).validate();
  } catch (const DomainError& e) {
    field_error("action_cost", e.what());
  }

  const int nz = FeatureTransform(kinds_of(*model)).feature_dim();
  require(c.state_cost.empty() || static_cast<int>(c.state_cost.size()) == nz,
          "state_cost", "expected " + std::to_string(nz) + " entries for " + c.system);
  for (double q : c.state_cost) {
    require(std::isfinite(q) && q >= 0.0, "state_cost", "entries must be >= 0");
  }

  const auto& adv = c.train.adversary;
  validate_adversary(adv, "adversary");
  if (c.eval.adversary) validate_adversary(*c.eval.adversary, "eval.adversary");
  try {
    c.train.validate();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    const auto sp = msg.find(' ');
    field_error(msg.substr(0, sp), msg.substr(sp + 1));
  }

  const auto& n = c.value_net;
  require(n.architecture == "quadratic" || n.architecture == "mlp",
          "value_net.architecture", "must be 'quadratic' or 'mlp'");
  require(n.ensemble >= 1, "value_net.ensemble", "must be >= 1");
  require(!n.hidden.empty(), "value_net.hidden", "needs at least one layer");
  for (int h : n.hidden) require(h >= 1, "value_net.hidden", "layer sizes must be >= 1");
  require(n.diag_eps > 0.0, "value_net.diag_eps", "must be > 0");

  require(c.success.angle_tol > 0.0, "success.angle_tol", "must be > 0");
  require(c.success.rate_tol > 0.0, "success.rate_tol", "must be > 0");
  require(c.success.hold_time >= 0.0, "success.hold_time", "must be >= 0");

  require(c.eval.episodes >= 1, "eval.episodes", "must be >= 1");
  require(c.eval.duration > 0.0, "eval.duration", "must be > 0");
  require(c.eval.jitter >= 0.0, "eval.jitter", "must be >= 0");
  try {
    parse_disturbance_mode(c.eval.mode);
  } catch (const std::exception&) {
    field_error("eval.mode", "unknown disturbance mode '" + c.eval.mode + "'");
  }

  if (c.sweep.axis.empty()) {
    require(c.sweep.values.empty() && c.sweep.seeds.empty(), "sweep.axis",
            "required when sweep values or seeds are given");
  } else {
    try {
      parse_sweep_axis(c.sweep.axis);
    } catch (const std::exception&) {
      field_error("sweep.axis", "unknown axis '" + c.sweep.axis + "'");
    }
    require(!c.sweep.values.empty(), "sweep.values", "must not be empty");
  }
  require(!c.output_dir.empty(), "output_dir", "must not be empty");
}

Vec default_state_cost(const ControlAffineModel& model) {
  const FeatureTransform f(kinds_of(model));
  const int nv = static_cast<int>(model.position_kinds().size());
  Vec q = Vec::Ones(f.feature_dim());
  q.tail(nv).setConstant(0.1);
  return q;
}

ActionCostSpec build_action_cost(const ActionCostConfig& config, int action_dim) {
  ActionCostSpec s = ActionCostSpec::make(parse_family(config.family), action_dim);
  if (!config.action_scale.empty()) {
    s.action_scale = Eigen::Map<const Vec>(config.action_scale.data(), action_dim);
  }
  if (!config.action_shift.empty()) {
    s.action_shift = Eigen::Map<const Vec>(config.action_shift.data(), action_dim);
  }
  s.cost_scale = config.cost_scale;
  if (!config.R.empty()) {
    for (int i = 0; i < action_dim; ++i) {
      for (int k = 0; k < action_dim; ++k) s.R(i, k) = config.R[i][k];
    }
  }
  return s;
}

namespace {

Problem make_problem(const ExperimentConfig& c, const ParamOverrides& overrides) {
  std::shared_ptr<const ControlAffineModel> model = make_model(c.system, overrides);
  ActionCostSpec cost = build_action_cost(c.action_cost, model->action_dim());
  Vec q = c.state_cost.empty()
              ? default_state_cost(*model)
              : Vec(Eigen::Map<const Vec>(c.state_cost.data(),
                                          static_cast<Eigen::Index>(c.state_cost.size())));
  return Problem(std::move(model), std::move(cost), std::move(q));
}

}  // namespace

TrainSetup build_setup(const ExperimentConfig& config) {
  return TrainSetup{make_problem(config, config.model_overrides), config.train,
                    config.value_net, config.success};
}

Problem build_eval_problem(const ExperimentConfig& config) {
  ParamOverrides merged = config.model_overrides;
  for (const auto& [k, v] : config.eval.model_overrides) merged[k] = v;
  return make_problem(config, merged);
}

}  // namespace cfvi
