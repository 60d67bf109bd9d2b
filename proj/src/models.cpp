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

#include "cfvi/models.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "cfvi/errors.hpp"

namespace cfvi {

namespace {

constexpr double kPi = std::numbers::pi;

struct ParamDefault {
  const char* name;
  double value;
};

template <std::size_t N>
Vec resolve_params(const std::array<ParamDefault, N>& defaults,
                   const ParamOverrides& overrides, const char* model,
                   std::vector<std::string>* names) {
  Vec values(static_cast<Eigen::Index>(N));
  names->clear();
  for (std::size_t i = 0; i < N; ++i) {
    names->emplace_back(defaults[i].name);
    values[static_cast<Eigen::Index>(i)] = defaults[i].value;
  }
  for (const auto& [key, value] : overrides) {
    bool found = false;
    for (std::size_t i = 0; i < N; ++i) {
      if (key == defaults[i].name) {
        values[static_cast<Eigen::Index>(i)] = value;
        found = true;
      }
    }
    if (!found) {
      throw ConfigError(std::string("unknown parameter '") + key +
                        "' for system '" + model + "'");
    }
  }
  return values;
}

Bounds make_bounds(std::initializer_list<double> lo,
                   std::initializer_list<double> hi) {
  Bounds b{Vec(static_cast<Eigen::Index>(lo.size())),
           Vec(static_cast<Eigen::Index>(hi.size()))};
  Eigen::Index i = 0;
  for (double v : lo) b.lower[i++] = v;
  i = 0;
  for (double v : hi) b.upper[i++] = v;
  return b;
}

MechanicalPartials zero_partials(int n, int nu, int np) {
  MechanicalPartials p;
  p.dmass_dq.assign(n, Mat::Zero(n, n));
  p.dbias_dq = Mat::Zero(n, n);
  p.dbias_dqd = Mat::Zero(n, n);
  p.dact_dq.assign(n, Mat::Zero(n, nu));
  p.dmass_dp.assign(np, Mat::Zero(n, n));
  p.dbias_dp = Mat::Zero(n, np);
  p.dact_dp.assign(np, Mat::Zero(n, nu));
  return p;
}

// ---------------------------------------------------------------------------
// Pendulum

constexpr std::array<ParamDefault, 4> kPendulumParams{{
    {"mass", 1.0}, {"length", 1.0}, {"gravity", 9.81}, {"damping", 0.0}}};

ModelLayout pendulum_layout(const ParamOverrides& o) {
  ModelLayout l;
  l.position_kinds = {JointKind::kContinuous};
  l.action_dim = 1;
  l.params = resolve_params(kPendulumParams, o, "pendulum", &l.param_names);
  l.domain = make_bounds({-kPi, -8.0}, {kPi, 8.0});
  l.desired = Vec::Zero(2);
  l.pole_index = 0;
  return l;
}

// ---------------------------------------------------------------------------
// Double integrator

constexpr std::array<ParamDefault, 1> kDoubleIntegratorParams{{{"mass", 1.0}}};

ModelLayout double_integrator_layout(const ParamOverrides& o) {
  ModelLayout l;
  l.position_kinds = {JointKind::kBounded};
  l.action_dim = 1;
  l.params = resolve_params(kDoubleIntegratorParams, o, "double_integrator",
                            &l.param_names);
  l.domain = make_bounds({-1.0, -1.0}, {1.0, 1.0});
  l.desired = Vec::Zero(2);
  l.pole_index = 0;
  return l;
}

// ---------------------------------------------------------------------------
// Cartpole

constexpr std::array<ParamDefault, 8> kCartpoleParams{{{"cart_mass", 0.50},
                                                       {"pole_mass", 0.127},
                                                       {"pole_length", 0.3365},
                                                       {"gravity", 9.81},
                                                       {"cart_damping", 5.4},
                                                       {"pole_damping", 0.0024},
                                                       {"force_gain", 1.40},
                                                       {"back_emf_gain", 6.27}}};

enum CartpoleParam { kMc, kMp, kLp, kG, kBeq, kBp, kKu, kKv };

ModelLayout cartpole_layout(const ParamOverrides& o) {
  ModelLayout l;
  l.position_kinds = {JointKind::kBounded, JointKind::kContinuous};
  l.action_dim = 1;
  l.params = resolve_params(kCartpoleParams, o, "cartpole", &l.param_names);
  l.domain = make_bounds({-0.4, -kPi, -4.0, -20.0}, {0.4, kPi, 4.0, 20.0});
  l.desired = Vec::Zero(4);
  l.pole_index = 1;
  return l;
}

// ---------------------------------------------------------------------------
// Furuta

constexpr std::array<ParamDefault, 9> kFurutaParams{{{"arm_mass", 0.095},
                                                     {"arm_length", 0.085},
                                                     {"pendulum_mass", 0.024},
                                                     {"pendulum_length", 0.129},
                                                     {"gravity", 9.81},
                                                     {"arm_damping", 5e-4},
                                                     {"pendulum_damping", 5e-5},
                                                     {"motor_resistance", 8.4},
                                                     {"motor_constant", 0.042}}};

enum FurutaParam { kMr, kLr, kFMp, kFLp, kFG, kDr, kDp, kRm, kKm };

ModelLayout furuta_layout(const ParamOverrides& o) {
  ModelLayout l;
  l.position_kinds = {JointKind::kBounded, JointKind::kContinuous};
  l.action_dim = 1;
  l.params = resolve_params(kFurutaParams, o, "furuta", &l.param_names);
  l.domain = make_bounds({-2.0, -kPi, -20.0, -30.0}, {2.0, kPi, 20.0, 30.0});
  l.desired = Vec::Zero(4);
  l.pole_index = 1;
  return l;
}

// Lumped inertial quantities of the Furuta pendulum; the equations of motion
// are linear in these, so parameter partials follow by the chain rule.
struct FurutaLumped {
  double j0;     // arm inertia about the motor axis incl. pendulum point mass
  double ja;     // pendulum inertia about its pivot
  double k;      // arm/pendulum coupling m_p L_r l_p
  double grav;   // m_p g l_p
  double visc;   // arm viscous + back-EMF damping
  double dp;     // pendulum damping
  double gain;   // motor torque per volt
};

FurutaLumped furuta_lumped(const Vec& t) {
  const double mr = t[kMr], lr = t[kLr], mp = t[kFMp], lp = t[kFLp];
  const double g = t[kFG], dr = t[kDr], dp = t[kDp], rm = t[kRm], km = t[kKm];
  return {mr * lr * lr / 12.0 + mp * lr * lr,
          mp * lp * lp / 3.0,
          0.5 * mp * lr * lp,
          0.5 * mp * g * lp,
          dr + km * km / rm,
          dp,
          km / rm};
}

// Partial derivative of every lumped quantity w.r.t. parameter k.
FurutaLumped furuta_lumped_partial(const Vec& t, int k) {
  const double mr = t[kMr], lr = t[kLr], mp = t[kFMp], lp = t[kFLp];
  const double g = t[kFG], rm = t[kRm], km = t[kKm];
  FurutaLumped d{0, 0, 0, 0, 0, 0, 0};
  switch (k) {
    case kMr:
      d.j0 = lr * lr / 12.0;
      break;
    case kLr:
      d.j0 = mr * lr / 6.0 + 2.0 * mp * lr;
      d.k = 0.5 * mp * lp;
      break;
    case kFMp:
      d.j0 = lr * lr;
      d.ja = lp * lp / 3.0;
      d.k = 0.5 * lr * lp;
      d.grav = 0.5 * g * lp;
      break;
    case kFLp:
      d.ja = 2.0 * mp * lp / 3.0;
      d.k = 0.5 * mp * lr;
      d.grav = 0.5 * mp * g;
      break;
    case kFG:
      d.grav = 0.5 * mp * lp;
      break;
    case kDr:
      d.visc = 1.0;
      break;
    case kDp:
      d.dp = 1.0;
      break;
    case kRm:
      d.visc = -km * km / (rm * rm);
      d.gain = -km / (rm * rm);
      break;
    case kKm:
      d.visc = 2.0 * km / rm;
      d.gain = 1.0 / rm;
      break;
    default:
      break;
  }
  return d;
}

struct FurutaBlocks {
  Mat mass;
  Vec bias;
  Mat act;
};

// M, bias and S as functions of the lumped quantities (linear in them).
FurutaBlocks furuta_blocks(const FurutaLumped& c, double alpha, double dphi,
                           double dalpha) {
  const double s = std::sin(alpha), co = std::cos(alpha);
  const double s2 = std::sin(2.0 * alpha);
  FurutaBlocks b{Mat(2, 2), Vec(2), Mat(2, 1)};
  b.mass << c.j0 + c.ja * s * s, c.k * co, c.k * co, c.ja;
  b.bias << -c.ja * s2 * dalpha * dphi + c.k * s * dalpha * dalpha -
                c.visc * dphi,
      0.5 * c.ja * s2 * dphi * dphi + c.grav * s - c.dp * dalpha;
  b.act << c.gain, 0.0;
  return b;
}

}  // namespace

// ---------------------------------------------------------------------------

Pendulum::Pendulum(const ParamOverrides& overrides)
    : MechanicalModel(pendulum_layout(overrides)) {}

MechanicalTerms Pendulum::terms(const Vec& q, const Vec& qd,
                                const Vec& t) const {
  const double m = t[0], l = t[1], g = t[2], b = t[3];
  MechanicalTerms out{Mat(1, 1), Vec(1), Mat::Ones(1, 1)};
  out.mass(0, 0) = m * l * l;
  out.bias[0] = m * g * l * std::sin(q[0]) - b * qd[0];
  return out;
}

MechanicalPartials Pendulum::partials(const Vec& q, const Vec& qd,
                                      const Vec& t) const {
  const double m = t[0], l = t[1], g = t[2];
  const double s = std::sin(q[0]);
  MechanicalPartials p = zero_partials(1, 1, 4);
  p.dbias_dq(0, 0) = m * g * l * std::cos(q[0]);
  p.dbias_dqd(0, 0) = -t[3];
  p.dmass_dp[0](0, 0) = l * l;
  p.dmass_dp[1](0, 0) = 2.0 * m * l;
  p.dbias_dp(0, 0) = g * l * s;
  p.dbias_dp(0, 1) = m * g * s;
  p.dbias_dp(0, 2) = m * l * s;
  p.dbias_dp(0, 3) = -qd[0];
  return p;
}

DoubleIntegrator::DoubleIntegrator(const ParamOverrides& overrides)
    : MechanicalModel(double_integrator_layout(overrides)) {}

MechanicalTerms DoubleIntegrator::terms(const Vec&, const Vec&,
                                        const Vec& t) const {
  return {Mat::Constant(1, 1, t[0]), Vec::Zero(1), Mat::Ones(1, 1)};
}

MechanicalPartials DoubleIntegrator::partials(const Vec&, const Vec&,
                                              const Vec&) const {
  MechanicalPartials p = zero_partials(1, 1, 1);
  p.dmass_dp[0](0, 0) = 1.0;
  return p;
}

Cartpole::Cartpole(const ParamOverrides& overrides)
    : MechanicalModel(cartpole_layout(overrides)) {}

MechanicalTerms Cartpole::terms(const Vec& q, const Vec& qd,
                                const Vec& t) const {
  const double mc = t[kMc], mp = t[kMp], len = t[kLp], g = t[kG];
  const double l = 0.5 * len;
  const double s = std::sin(q[1]), c = std::cos(q[1]);
  MechanicalTerms out{Mat(2, 2), Vec(2), Mat(2, 1)};
  out.mass << mc + mp, mp * l * c, mp * l * c, mp * len * len / 3.0;
  out.bias << -(t[kBeq] + t[kKv]) * qd[0] + mp * l * s * qd[1] * qd[1],
      mp * g * l * s - t[kBp] * qd[1];
  out.actuation << t[kKu], 0.0;
  return out;
}

MechanicalPartials Cartpole::partials(const Vec& q, const Vec& qd,
                                      const Vec& t) const {
  const double mp = t[kMp], len = t[kLp], g = t[kG];
  const double l = 0.5 * len;
  const double s = std::sin(q[1]), c = std::cos(q[1]);
  const double w2 = qd[1] * qd[1];
  MechanicalPartials p = zero_partials(2, 1, 8);

  p.dmass_dq[1] << 0.0, -mp * l * s, -mp * l * s, 0.0;
  p.dbias_dq.col(1) << mp * l * c * w2, mp * g * l * c;
  p.dbias_dqd.col(0) << -(t[kBeq] + t[kKv]), 0.0;
  p.dbias_dqd.col(1) << 2.0 * mp * l * s * qd[1], -t[kBp];

  p.dmass_dp[kMc] << 1.0, 0.0, 0.0, 0.0;
  p.dmass_dp[kMp] << 1.0, l * c, l * c, len * len / 3.0;
  p.dbias_dp.col(kMp) << l * s * w2, g * l * s;
  p.dmass_dp[kLp] << 0.0, 0.5 * mp * c, 0.5 * mp * c, 2.0 * mp * len / 3.0;
  p.dbias_dp.col(kLp) << 0.5 * mp * s * w2, 0.5 * mp * g * s;
  p.dbias_dp.col(kG) << 0.0, mp * l * s;
  p.dbias_dp.col(kBeq) << -qd[0], 0.0;
  p.dbias_dp.col(kBp) << 0.0, -qd[1];
  p.dact_dp[kKu] << 1.0, 0.0;
  p.dbias_dp.col(kKv) << -qd[0], 0.0;
  return p;
}

FurutaPendulum::FurutaPendulum(const ParamOverrides& overrides)
    : MechanicalModel(furuta_layout(overrides)) {}

MechanicalTerms FurutaPendulum::terms(const Vec& q, const Vec& qd,
                                      const Vec& t) const {
  FurutaBlocks b = furuta_blocks(furuta_lumped(t), q[1], qd[0], qd[1]);
  return {std::move(b.mass), std::move(b.bias), std::move(b.act)};
}

MechanicalPartials FurutaPendulum::partials(const Vec& q, const Vec& qd,
                                            const Vec& t) const {
  const FurutaLumped c = furuta_lumped(t);
  const double a = q[1], dphi = qd[0], dal = qd[1];
  const double s = std::sin(a), co = std::cos(a);
  const double s2 = std::sin(2.0 * a), c2 = std::cos(2.0 * a);
  MechanicalPartials p = zero_partials(2, 1, 9);

  p.dmass_dq[1] << c.ja * s2, -c.k * s, -c.k * s, 0.0;
  p.dbias_dq.col(1) << -2.0 * c.ja * c2 * dal * dphi + c.k * co * dal * dal,
      c.ja * c2 * dphi * dphi + c.grav * co;
  p.dbias_dqd.col(0) << -c.ja * s2 * dal - c.visc, c.ja * s2 * dphi;
  p.dbias_dqd.col(1) << -c.ja * s2 * dphi + 2.0 * c.k * s * dal, -c.dp;

  for (int k = 0; k < 9; ++k) {
    const FurutaBlocks d = furuta_blocks(furuta_lumped_partial(t, k), a, dphi, dal);
    p.dmass_dp[k] = d.mass;
    p.dbias_dp.col(k) = d.bias;
    p.dact_dp[k] = d.act;
  }
  return p;
}

std::vector<std::string> model_names() {
  return {"pendulum", "double_integrator", "cartpole", "furuta"};
}

std::unique_ptr<ControlAffineModel> make_model(std::string_view name,
                                               const ParamOverrides& overrides) {
  if (name == "pendulum") return std::make_unique<Pendulum>(overrides);
  if (name == "double_integrator") {
    return std::make_unique<DoubleIntegrator>(overrides);
  }
  if (name == "cartpole") return std::make_unique<Cartpole>(overrides);
  if (name == "furuta") return std::make_unique<FurutaPendulum>(overrides);
  throw ConfigError("unknown system '" + std::string(name) + "'");
}

}  // namespace cfvi
