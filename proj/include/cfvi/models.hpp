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

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "cfvi/dynamics.hpp"

namespace cfvi {

using ParamOverrides = std::map<std::string, double>;

// Angles of every pendulum are measured from upright, so the desired state is
// the origin for all systems and "hanging" is theta = pi.

/// One-link torque pendulum, point mass at the tip: I = m l^2,
///   I qdd = m g l sin(q) - b qd + u.
/// Parameters: mass [kg] = 1, length [m] = 1, gravity [m/s^2] = 9.81,
/// damping [N m s] = 0.
class Pendulum final : public MechanicalModel {
 public:
  explicit Pendulum(const ParamOverrides& overrides = {});
  std::string name() const override { return "pendulum"; }

 protected:
  MechanicalTerms terms(const Vec& q, const Vec& qd,
                        const Vec& theta) const override;
  MechanicalPartials partials(const Vec& q, const Vec& qd,
                              const Vec& theta) const override;
};

/// Force-driven point mass, m pdd = u. Linear; used as the LQR reference.
/// Parameters: mass [kg] = 1.
class DoubleIntegrator final : public MechanicalModel {
 public:
  explicit DoubleIntegrator(const ParamOverrides& overrides = {});
  std::string name() const override { return "double_integrator"; }

 protected:
  MechanicalTerms terms(const Vec& q, const Vec& qd,
                        const Vec& theta) const override;
  MechanicalPartials partials(const Vec& q, const Vec& qd,
                              const Vec& theta) const override;
};

/// Voltage-driven cart with a uniform pole, q = (cart position, pole angle).
/// The DC motor is lumped into an affine force model F = k_u V - k_v sd.
/// Defaults approximate the Quanser linear-servo cartpole (implementation
/// choices, not vendor ground truth):
///   cart_mass 0.50 kg (cart 0.38 kg plus reflected rotor inertia),
///   pole_mass 0.127 kg, pole_length 0.3365 m, gravity 9.81 m/s^2,
///   cart_damping 5.4 N s/m, pole_damping 0.0024 N m s,
///   force_gain 1.40 N/V, back_emf_gain 6.27 N s/m.
class Cartpole final : public MechanicalModel {
 public:
  explicit Cartpole(const ParamOverrides& overrides = {});
  std::string name() const override { return "cartpole"; }

 protected:
  MechanicalTerms terms(const Vec& q, const Vec& qd,
                        const Vec& theta) const override;
  MechanicalPartials partials(const Vec& q, const Vec& qd,
                              const Vec& theta) const override;
};

/// Rotary (Furuta) pendulum, q = (arm angle, pendulum angle), driven by a
/// DC motor with torque k_m (V - k_m qd_arm) / R_m. Defaults approximate the
/// Quanser Qube (implementation choices):
///   arm_mass 0.095 kg, arm_length 0.085 m, pendulum_mass 0.024 kg,
///   pendulum_length 0.129 m, gravity 9.81 m/s^2, arm_damping 5e-4 N m s,
///   pendulum_damping 5e-5 N m s, motor_resistance 8.4 Ohm,
///   motor_constant 0.042 N m/A.
class FurutaPendulum final : public MechanicalModel {
 public:
  explicit FurutaPendulum(const ParamOverrides& overrides = {});
  std::string name() const override { return "furuta"; }

 protected:
  MechanicalTerms terms(const Vec& q, const Vec& qd,
                        const Vec& theta) const override;
  MechanicalPartials partials(const Vec& q, const Vec& qd,
                              const Vec& theta) const override;
};

std::vector<std::string> model_names();

/// Throws ConfigError for unknown systems or parameter names.
std::unique_ptr<ControlAffineModel> make_model(
    std::string_view name, const ParamOverrides& overrides = {});

}  // namespace cfvi
