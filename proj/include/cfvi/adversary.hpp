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

#include <optional>

#include "cfvi/dynamics.hpp"
#include "cfvi/rng.hpp"

namespace cfvi {

struct EnergyBall {
  double alpha = 0.0;  // radius in natural units; 0 disables the channel
};

struct AmplitudeBox {
  Vec lower;
  Vec upper;

  // Symmetric box of +-fraction * |nominal| around zero.
  static AmplitudeBox relative(const Vec& nominal, double fraction);
  Vec center() const { return 0.5 * (upper + lower); }
  Vec half_width() const { return 0.5 * (upper - lower); }
  void validate() const;
};

// -alpha * z / ||z||, or 0 when z = 0.
Vec energy_ball_worst(const Vec& z, const EnergyBall& set);
// -half_width * sign(z) + center, componentwise; center where z_i = 0.
Vec box_worst(const Vec& z, const AmplitudeBox& set);

Vec state_adversary(const Vec& grad_v, const EnergyBall& set);
Vec action_adversary(const Mat& B, const Vec& grad_v, const EnergyBall& set);
// z_o = (da/dx + dB/dx u)^T grad V.
Vec observation_adversary(const Jacobians& j, const Vec& u, const Vec& grad_v,
                          const EnergyBall& set);
// z_theta = (da/dtheta + dB/dtheta u)^T grad V.
Vec model_adversary(const Jacobians& j, const Vec& u, const Vec& grad_v,
                    const AmplitudeBox& set);

// Adversary channels that are active together.
struct AdversarySet {
  std::optional<EnergyBall> state;
  std::optional<EnergyBall> action;
  std::optional<EnergyBall> observation;
  std::optional<AmplitudeBox> model;

  bool empty() const;
  bool needs_jacobians() const { return observation || model; }
};

/// Worst-case disturbances for the current state, action and value gradient.
/// `scale` multiplies the state, action and observation magnitudes only.
DisturbanceBundle worst_case_disturbance(const ControlAffineModel& model,
                                         const AdversarySet& set, const Vec& x,
                                         const Vec& u, const Vec& grad_v,
                                         double scale = 1.0);

// Reflected Brownian motion on [0, 1] used to modulate adversary amplitude.
// One instance per rollout; not thread-safe.
class WienerModulation {
 public:
  explicit WienerModulation(double sigma, double level = 1.0);

  double level() const { return level_; }
  double sigma() const { return sigma_; }
  // Advances by dt and returns the new level.
  double advance(double dt, Rng& rng);

  // Folds x into [0, 1] by reflection at both ends.
  static double reflect(double x);

 private:
  double sigma_;
  double level_;
};

}  // namespace cfvi
