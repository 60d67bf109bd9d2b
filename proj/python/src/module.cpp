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


#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>
#include <string>

#include "cfvi/checkpoint.hpp"
#include "cfvi/config.hpp"
#include "cfvi/errors.hpp"
#include "cfvi/eval.hpp"
#include "cfvi/experiment.hpp"
#include "cfvi/models.hpp"

namespace py = pybind11;
using namespace cfvi;

namespace {

py::dict summary_dict(const Summary& s) {
  py::dict d;
  d["mean"] = s.mean;
  d["std"] = s.std;
  d["p25"] = s.p25;
  d["p50"] = s.p50;
  d["p75"] = s.p75;
  return d;
}

py::dict stats_dict(const RewardStats& st) {
  py::dict d;
  d["episodes"] = st.episodes;
  d["success_rate"] = st.success_rate;
  d["failures"] = st.failures;
  d["return"] = summary_dict(st.total);
  d["state_return"] = summary_dict(st.state);
  d["action_cost"] = summary_dict(st.action);
  return d;
}

py::dict curve_dict(const CurveRecord& r) {
  py::dict d;
  d["iteration"] = r.iteration;
  d["loss"] = r.loss;
  d["mean_return"] = r.mean_return;
  d["min_return"] = r.min_return;
  d["max_return"] = r.max_return;
  d["success_rate"] = r.success_rate;
  d["dataset_size"] = r.dataset_size;
  return d;
}

// A trained value function together with the experiment that produced it.
struct Policy {
  ExperimentConfig config;
  std::shared_ptr<ValueEnsemble> ensemble;

  TrainSetup setup() const { return build_setup(config); }
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Continuous fitted value iteration with closed-form policies and adversaries";

  auto error = py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<CheckpointError>(m, "CheckpointError", error.ptr());
  py::register_exception<DomainError>(m, "DomainError", error.ptr());
  py::register_exception<UnsupportedOperation>(m, "UnsupportedOperation", error.ptr());
  py::register_exception<TrainingDivergence>(m, "TrainingDivergence", error.ptr());

  m.def("model_names", &model_names);

  py::class_<ControlAffineModel, std::shared_ptr<ControlAffineModel>>(m, "Model")
      .def(py::init([](const std::string& name, const ParamOverrides& overrides) {
             return std::shared_ptr<ControlAffineModel>(make_model(name, overrides));
           }),
           py::arg("name"), py::arg("overrides") = ParamOverrides{})
      .def_property_readonly("name", &ControlAffineModel::name)
      .def_property_readonly("state_dim", &ControlAffineModel::state_dim)
      .def_property_readonly("action_dim", &ControlAffineModel::action_dim)
      .def_property_readonly("param_names", &ControlAffineModel::param_names)
      .def_property_readonly("params", &ControlAffineModel::params)
      .def_property_readonly("desired_state", &ControlAffineModel::desired_state)
      .def_property_readonly("domain",
                             [](const ControlAffineModel& self) {
                               return py::make_tuple(self.domain().lower, self.domain().upper);
                             })
      .def("drift", py::overload_cast<const Vec&>(&ControlAffineModel::drift, py::const_),
           py::arg("x"))
      .def("control_matrix",
           py::overload_cast<const Vec&>(&ControlAffineModel::control_matrix, py::const_),
           py::arg("x"))
      .def("dynamics",
           py::overload_cast<const Vec&, const Vec&>(&ControlAffineModel::dynamics, py::const_),
           py::arg("x"), py::arg("u"))
      .def("step",
           py::overload_cast<const Vec&, const Vec&, double>(&ControlAffineModel::step,
                                                             py::const_),
           py::arg("x"), py::arg("u"), py::arg("dt"));

  py::class_<ActionCostSpec>(m, "ActionCost")
      .def(py::init([](const std::string& family, int dim) {
             return ActionCostSpec::make(parse_family(family), dim);
           }),
           py::arg("family"), py::arg("dim") = 1)
      .def_static("linear", &ActionCostSpec::linear, py::arg("R"))
      .def("composed",
           [](const ActionCostSpec& self, const Vec& action_scale, double cost_scale,
              std::optional<Vec> action_shift) {
             return compose(self, action_scale, cost_scale,
                            action_shift.value_or(Vec::Zero(self.dim())));
           },
           py::arg("action_scale"), py::arg("cost_scale") = 1.0,
           py::arg("action_shift") = py::none())
      .def_property_readonly("family",
                             [](const ActionCostSpec& self) { return family_name(self.family); })
      .def_property_readonly("dim", &ActionCostSpec::dim)
      .def("cost", [](const ActionCostSpec& self, const Vec& u) { return cost(self, u); })
      .def("conjugate",
           [](const ActionCostSpec& self, const Vec& w) { return conjugate(self, w); })
      .def("policy", [](const ActionCostSpec& self, const Vec& w) { return policy_shape(self, w); })
      .def("grad_cost",
           [](const ActionCostSpec& self, const Vec& u) { return grad_cost(self, u); });

  m.def(
      "state_adversary",
      [](const Vec& grad_v, double alpha) { return state_adversary(grad_v, EnergyBall{alpha}); },
      py::arg("grad_v"), py::arg("alpha"));
  m.def(
      "action_adversary",
      [](const Mat& b, const Vec& grad_v, double alpha) {
        return action_adversary(b, grad_v, EnergyBall{alpha});
      },
      py::arg("B"), py::arg("grad_v"), py::arg("alpha"));

  py::class_<ExperimentConfig>(m, "Config")
      .def_static(
          "parse",
          [](const std::string& text) { return parse_config(text); }, py::arg("text"))
      .def_static("load", &load_config, py::arg("path"))
      .def("to_json", [](const ExperimentConfig& self) { return to_json(self); })
      .def_property_readonly("hash", [](const ExperimentConfig& self) { return config_hash(self); })
      .def_property_readonly("system", [](const ExperimentConfig& self) { return self.system; });

  py::class_<RewardStats>(m, "RewardStats")
      .def("as_dict", [](const RewardStats& st) { return stats_dict(st); })
      .def_readonly("episodes", &RewardStats::episodes)
      .def_readonly("success_rate", &RewardStats::success_rate)
      .def_readonly("failures", &RewardStats::failures);

  py::class_<Policy>(m, "Policy")
      .def_property_readonly("config", [](const Policy& self) { return self.config; })
      .def("value", [](const Policy& self, const Vec& x) { return self.ensemble->value(x); })
      .def("gradient", [](const Policy& self, const Vec& x) { return self.ensemble->gradient(x); })
      .def("values", [](const Policy& self, const Mat& x) { return self.ensemble->values(x); })
      .def("action",
           [](const Policy& self, const Vec& x) {
             return self.setup().problem.policy(*self.ensemble, x);
           })
      .def(
          "evaluate",
          [](const Policy& self, int episodes, const std::string& mode, std::uint64_t seed) {
            const TrainSetup s = self.setup();
            TrainConfig t = s.train;
            if (self.config.eval.adversary) t.adversary = *self.config.eval.adversary;
            EvalOptions o;
            o.episodes = episodes;
            o.duration = self.config.eval.duration;
            o.jitter = self.config.eval.jitter;
            o.mode = parse_disturbance_mode(mode);
            o.seed = seed;
            py::gil_scoped_release release;
            return reward_stats(evaluate_policy(s.problem, *self.ensemble, t, o),
                                s.problem.model().pole_index(), s.success);
          },
          py::arg("episodes") = 30, py::arg("mode") = "none", py::arg("seed") = 0,
          py::return_value_policy::move)
      .def("save", [](const Policy& self, const std::string& path, int iteration) {
        save_checkpoint(path, self.config, *self.ensemble, iteration);
      }, py::arg("path"), py::arg("iteration") = 0);

  m.def(
      "train",
      [](const ExperimentConfig& config) {
        validate(config);
        const TrainSetup s = build_setup(config);
        std::vector<CurveRecord> curve;
        std::shared_ptr<ValueEnsemble> ens;
        {
          py::gil_scoped_release release;
          TrainResult r = train(s.problem, s.train, s.net, s.success);
          curve = r.curve;
          ens = std::make_shared<ValueEnsemble>(std::move(r.ensemble));
        }
        py::list rows;
        for (const auto& r : curve) rows.append(curve_dict(r));
        return py::make_tuple(Policy{config, ens}, rows);
      },
      py::arg("config"), "Trains from a config; returns (policy, learning curve rows).");

  m.def(
      "load_checkpoint",
      [](const std::string& path) {
        Checkpoint c = load_checkpoint(path);
        return Policy{c.config, std::make_shared<ValueEnsemble>(std::move(c.ensemble))};
      },
      py::arg("path"));

}
