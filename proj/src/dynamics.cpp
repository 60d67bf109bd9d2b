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

#include "cfvi/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "cfvi/errors.hpp"

namespace cfvi {

namespace {

bool all_zero(const std::optional<Vec>& v) {
  return !v || (v->array() == 0.0).all();
}

void check_size(const Vec& v, int n, const char* what) {
  if (v.size() != n) {
    std::ostringstream os;
    os << what << " has dimension " << v.size() << ", expected " << n;
    throw std::invalid_argument(os.str());
  }
}

std::string describe(const Vec& x) {
  std::ostringstream os;
  os << "[";
  for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << "]";
  return os.str();
}

}  // namespace

double wrap_angle(double angle) {
  constexpr double kPi = std::numbers::pi;
  if (angle >= -kPi && angle < kPi) return angle;
  double r = std::fmod(angle + kPi, 2.0 * kPi);
  if (r < 0.0) r += 2.0 * kPi;
  double w = r - kPi;
  // fmod can land exactly on +pi after rounding.
  if (w >= kPi) w -= 2.0 * kPi;
  return w;
}

Vec wrap_angles(const Vec& x, std::span<const JointKind> position_kinds) {
  Vec out = x;
  for (std::size_t i = 0; i < position_kinds.size(); ++i) {
    if (position_kinds[i] == JointKind::kContinuous) {
      out[static_cast<Eigen::Index>(i)] = wrap_angle(x[static_cast<Eigen::Index>(i)]);
    }
  }
  return out;
}

State::State(Vec q_in, Vec qd_in, std::vector<JointKind> kinds_in)
    : q(std::move(q_in)), qd(std::move(qd_in)), kinds(std::move(kinds_in)) {
  if (q.size() != qd.size() ||
      q.size() != static_cast<Eigen::Index>(kinds.size())) {
    throw std::invalid_argument("State: q, qd and joint kinds differ in size");
  }
}

State State::from_flat(const Vec& x, std::vector<JointKind> kinds) {
  const auto n = static_cast<Eigen::Index>(kinds.size());
  if (x.size() != 2 * n) {
    throw std::invalid_argument("State::from_flat: size mismatch");
  }
  return State(x.head(n), x.tail(n), std::move(kinds));
}

Vec State::flat() const {
  Vec x(2 * q.size());
  x << q, qd;
  return x;
}

State wrap_angles(const State& s) {
  State out = s;
  for (std::size_t i = 0; i < s.kinds.size(); ++i) {
    if (s.kinds[i] == JointKind::kContinuous) {
      out.q[static_cast<Eigen::Index>(i)] = wrap_angle(s.q[static_cast<Eigen::Index>(i)]);
    }
  }
  return out;
}

bool Bounds::contains(const Vec& x) const {
  return (x.array() >= lower.array()).all() &&
         (x.array() <= upper.array()).all();
}

Mat Jacobians::dB_dx_times(const Vec& u) const {
  const auto n = da_dx.rows();
  Mat out(n, static_cast<Eigen::Index>(dB_dx.size()));
  for (std::size_t k = 0; k < dB_dx.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) = dB_dx[k] * u;
  }
  return out;
}

Mat Jacobians::dB_dtheta_times(const Vec& u) const {
  const auto n = da_dtheta.rows();
  Mat out(n, static_cast<Eigen::Index>(dB_dtheta.size()));
  for (std::size_t k = 0; k < dB_dtheta.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) = dB_dtheta[k] * u;
  }
  return out;
}

bool DisturbanceBundle::empty() const {
  return all_zero(state) && all_zero(action) && all_zero(observation) &&
         all_zero(params);
}

ControlAffineModel::ControlAffineModel(ModelLayout layout)
    : position_kinds_(std::move(layout.position_kinds)),
      action_dim_(layout.action_dim),
      param_names_(std::move(layout.param_names)),
      params_(std::move(layout.params)),
      domain_(std::move(layout.domain)),
      desired_(std::move(layout.desired)),
      pole_index_(layout.pole_index) {
  if (params_.size() != static_cast<Eigen::Index>(param_names_.size())) {
    throw std::invalid_argument("parameter names and values differ in size");
  }
  check_size(domain_.lower, state_dim(), "domain lower bound");
  check_size(domain_.upper, state_dim(), "domain upper bound");
  check_size(desired_, state_dim(), "desired state");
  if (!params_.allFinite()) throw ModelError("non-finite model parameter");
}

int ControlAffineModel::param_index(std::string_view name) const {
  for (std::size_t i = 0; i < param_names_.size(); ++i) {
    if (param_names_[i] == name) return static_cast<int>(i);
  }
  throw std::out_of_range("unknown parameter '" + std::string(name) +
                          "' for model " + this->name());
}

void ControlAffineModel::check_finite(const Vec& v, const char* what,
                                      const Vec& x) const {
  if (!v.allFinite()) {
    throw ModelError(name() + ": non-finite " + what + " at x = " +
                     describe(x));
  }
}

Vec ControlAffineModel::dynamics(const Vec& x, const Vec& u,
                                 const Vec& theta) const {
  return drift(x, theta) + control_matrix(x, theta) * u;
}

Vec ControlAffineModel::step(const Vec& x, const Vec& u, double dt) const {
  return step(x, u, DisturbanceBundle{}, dt);
}

Vec ControlAffineModel::step(const Vec& x, const Vec& u,
                             const DisturbanceBundle& d, double dt) const {
  if (!(dt >= 0.0)) throw std::invalid_argument("step: dt must be >= 0");
  check_size(x, state_dim(), "state");
  check_size(u, action_dim(), "action");

  Vec x_eval;
  const Vec* xe = &x;
  if (!all_zero(d.observation)) {
    check_size(*d.observation, state_dim(), "observation disturbance");
    x_eval = x + *d.observation;
    xe = &x_eval;
  }
  Vec theta_eval;
  const Vec* th = &params_;
  if (!all_zero(d.params)) {
    check_size(*d.params, param_dim(), "parameter disturbance");
    theta_eval = params_ + *d.params;
    th = &theta_eval;
  }
  Vec u_eval;
  const Vec* ue = &u;
  if (!all_zero(d.action)) {
    check_size(*d.action, action_dim(), "action disturbance");
    u_eval = u + *d.action;
    ue = &u_eval;
  }

  Vec rate = drift(*xe, *th) + control_matrix(*xe, *th) * (*ue);
  if (!all_zero(d.state)) {
    check_size(*d.state, state_dim(), "state disturbance");
    rate += *d.state;
  }
  Vec next = x + dt * rate;
  if (!next.allFinite()) {
    throw IntegrationError(name() + ": integration blow-up from x = " +
                               describe(x),
                           next);
  }
  return next;
}

Vec MechanicalModel::drift(const Vec& x, const Vec& theta) const {
  const int n = dofs();
  const Vec q = x.head(n);
  const Vec qd = x.tail(n);
  const MechanicalTerms t = terms(q, qd, theta);
  Vec a(2 * n);
  a.head(n) = qd;
  a.tail(n) = t.mass.llt().solve(t.bias);
  check_finite(a, "drift", x);
  return a;
}

Mat MechanicalModel::control_matrix(const Vec& x, const Vec& theta) const {
  const int n = dofs();
  const MechanicalTerms t = terms(x.head(n), x.tail(n), theta);
  Mat b = Mat::Zero(2 * n, action_dim());
  b.bottomRows(n) = t.mass.llt().solve(t.actuation);
  if (!b.allFinite()) {
    throw ModelError(name() + ": non-finite control matrix");
  }
  return b;
}

Jacobians MechanicalModel::jacobians(const Vec& x, const Vec& /*u*/,
                                     const Vec& theta) const {
  const int n = dofs();
  const int nx = 2 * n;
  const int nu = action_dim();
  const int np = param_dim();
  const Vec q = x.head(n);
  const Vec qd = x.tail(n);
  const MechanicalTerms t = terms(q, qd, theta);
  const MechanicalPartials p = partials(q, qd, theta);
  const Eigen::LLT<Mat> mass(t.mass);
  const Vec qdd = mass.solve(t.bias);
  const Mat bq = mass.solve(t.actuation);

  // d(M^-1 v)/dy = M^-1 (dv/dy - dM/dy M^-1 v)
  Jacobians j;
  j.da_dx = Mat::Zero(nx, nx);
  j.da_dx.topRightCorner(n, n).setIdentity();
  for (int k = 0; k < n; ++k) {
    j.da_dx.block(n, k, n, 1) =
        mass.solve(p.dbias_dq.col(k) - p.dmass_dq[k] * qdd);
  }
  j.da_dx.bottomRightCorner(n, n) = mass.solve(p.dbias_dqd);

  j.dB_dx.assign(nx, Mat::Zero(nx, nu));
  for (int k = 0; k < n; ++k) {
    j.dB_dx[k].bottomRows(n) = mass.solve(p.dact_dq[k] - p.dmass_dq[k] * bq);
  }

  j.da_dtheta = Mat::Zero(nx, np);
  j.dB_dtheta.assign(np, Mat::Zero(nx, nu));
  for (int k = 0; k < np; ++k) {
    j.da_dtheta.block(n, k, n, 1) =
        mass.solve(p.dbias_dp.col(k) - p.dmass_dp[k] * qdd);
    j.dB_dtheta[k].bottomRows(n) =
        mass.solve(p.dact_dp[k] - p.dmass_dp[k] * bq);
  }

  bool finite = j.da_dx.allFinite() && j.da_dtheta.allFinite();
  for (const auto& m : j.dB_dx) finite = finite && m.allFinite();
  for (const auto& m : j.dB_dtheta) finite = finite && m.allFinite();
  if (!finite) throw ModelError(name() + ": non-finite Jacobian");
  return j;
}

}  // namespace cfvi
