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

#include "cfvi/adversary.hpp"

#include <cmath>
#include <stdexcept>

#include "cfvi/errors.hpp"

namespace cfvi {

AmplitudeBox AmplitudeBox::relative(const Vec& nominal, double fraction) {
  if (!(fraction >= 0.0)) throw DomainError("box fraction must be >= 0");
  const Vec h = fraction * nominal.cwiseAbs();
  return {-h, h};
}

void AmplitudeBox::validate() const {
  if (lower.size() != upper.size()) throw DomainError("box bounds differ in size");
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!(lower[i] <= upper[i])) {
      throw DomainError("box lower bound exceeds upper bound at index " +
                        std::to_string(i));
    }
  }
}

Vec energy_ball_worst(const Vec& z, const EnergyBall& set) {
  if (!(set.alpha >= 0.0)) throw DomainError("energy ball radius must be >= 0");
  const double n = z.norm();
  if (n == 0.0 || set.alpha == 0.0) return Vec::Zero(z.size());
  return (-set.alpha / n) * z;
}

Vec box_worst(const Vec& z, const AmplitudeBox& set) {
  if (z.size() != set.lower.size()) {
    throw std::invalid_argument("box and gradient sizes differ");
  }
  const Vec mu = set.center(), delta = set.half_width();
  Vec xi(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double s = z[i] > 0.0 ? 1.0 : (z[i] < 0.0 ? -1.0 : 0.0);
    xi[i] = -delta[i] * s + mu[i];
  }
  return xi;
}

Vec state_adversary(const Vec& grad_v, const EnergyBall& set) {
  return energy_ball_worst(grad_v, set);
}

Vec action_adversary(const Mat& B, const Vec& grad_v, const EnergyBall& set) {
  return energy_ball_worst(B.transpose() * grad_v, set);
}

Vec observation_adversary(const Jacobians& j, const Vec& u, const Vec& grad_v,
                          const EnergyBall& set) {
  return energy_ball_worst((j.da_dx + j.dB_dx_times(u)).transpose() * grad_v,
                           set);
}

Vec model_adversary(const Jacobians& j, const Vec& u, const Vec& grad_v,
                    const AmplitudeBox& set) {
  return box_worst((j.da_dtheta + j.dB_dtheta_times(u)).transpose() * grad_v,
                   set);
}

bool AdversarySet::empty() const {
  return !state && !action && !observation && !model;
}

DisturbanceBundle worst_case_disturbance(const ControlAffineModel& model,
                                         const AdversarySet& set, const Vec& x,
                                         const Vec& u, const Vec& grad_v,
                                         double scale) {
  DisturbanceBundle d;
  auto scaled = [scale](const EnergyBall& b) { return EnergyBall{scale * b.alpha}; };
  if (set.state) d.state = state_adversary(grad_v, scaled(*set.state));
  if (set.action) {
    d.action = action_adversary(model.control_matrix(x), grad_v, scaled(*set.action));
  }
  if (set.needs_jacobians()) {
    const Jacobians j = model.jacobians(x, u);
    if (set.observation) {
      d.observation = observation_adversary(j, u, grad_v, scaled(*set.observation));
    }
    if (set.model) d.params = model_adversary(j, u, grad_v, *set.model);
  }
  return d;
}

WienerModulation::WienerModulation(double sigma, double level)
    : sigma_(sigma), level_(reflect(level)) {
  if (!(sigma >= 0.0)) throw DomainError("modulation sigma must be >= 0");
}

double WienerModulation::reflect(double x) {
  double y = std::fmod(x, 2.0);
  if (y < 0.0) y += 2.0;
  return y > 1.0 ? 2.0 - y : y;
}

double WienerModulation::advance(double dt, Rng& rng) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (sigma_ == 0.0) return level_;
  std::normal_distribution<double> n(0.0, 1.0);
  level_ = reflect(level_ + std::sqrt(dt) * sigma_ * n(rng));
  return level_;
}

}  // namespace cfvi
