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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace cfvi {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Continuous revolute joints live on the circle and are wrapped for
// features; bounded joints (prismatic or limited revolute) are not.
enum class JointKind { kContinuous, kBounded };

/// Maps an angle into [-pi, pi).
double wrap_angle(double angle);

/// Wraps every continuous position of a flat state x = [q; qd]. The input is
/// left untouched; wrapping is a view of the same configuration.
Vec wrap_angles(const Vec& x, std::span<const JointKind> position_kinds);

struct State {
  Vec q;
  Vec qd;
  std::vector<JointKind> kinds;

  State(Vec q, Vec qd, std::vector<JointKind> kinds);
  static State from_flat(const Vec& x, std::vector<JointKind> kinds);

  Vec flat() const;
  int dofs() const { return static_cast<int>(q.size()); }
};

State wrap_angles(const State& s);

struct Bounds {
  Vec lower;
  Vec upper;

  bool contains(const Vec& x) const;
  Vec center() const { return 0.5 * (lower + upper); }
};

// Derivatives of the drift a(x; theta) and control matrix B(x; theta).
// Tensor-valued derivatives are stored as slices: dB_dx[k] = dB/dx_k.
struct Jacobians {
  Mat da_dx;
  std::vector<Mat> dB_dx;
  Mat da_dtheta;
  std::vector<Mat> dB_dtheta;

  // (dB/dx) u, a state_dim x state_dim matrix.
  Mat dB_dx_times(const Vec& u) const;
  // (dB/dtheta) u, a state_dim x param_dim matrix.
  Mat dB_dtheta_times(const Vec& u) const;
};

// Optional disturbance channels. Absent and all-zero components are
// equivalent: neither touches the nominal computation.
struct DisturbanceBundle {
  std::optional<Vec> state;        // xi_x, added to the state rate
  std::optional<Vec> action;       // xi_u, added to the action
  std::optional<Vec> observation;  // xi_o, shifts where a and B are evaluated
  std::optional<Vec> params;       // xi_theta, shifts the model parameters

  bool empty() const;
};

// Everything a concrete model fixes at construction.
struct ModelLayout {
  std::vector<JointKind> position_kinds;
  int action_dim = 1;
  std::vector<std::string> param_names;
  Vec params;
  Bounds domain;
  Vec desired;
  int pole_index = 0;
};

/// Control-affine dynamics x_dot = a(x; theta) + B(x; theta) u.
///
/// Implementations are immutable after construction and safe to share
/// between threads.
class ControlAffineModel {
 public:
  virtual ~ControlAffineModel() = default;

  virtual std::string name() const = 0;

  int state_dim() const { return 2 * dofs(); }
  int dofs() const { return static_cast<int>(position_kinds_.size()); }
  int action_dim() const { return action_dim_; }
  int param_dim() const { return static_cast<int>(param_names_.size()); }

  std::span<const JointKind> position_kinds() const { return position_kinds_; }
  const std::vector<std::string>& param_names() const { return param_names_; }
  const Vec& params() const { return params_; }
  // Throws std::out_of_range for unknown names.
  int param_index(std::string_view name) const;
  double param(std::string_view name) const { return params_[param_index(name)]; }

  const Bounds& domain() const { return domain_; }
  const Vec& desired_state() const { return desired_; }
  // Index of the pole angle inside the flat state; used for success checks.
  int pole_index() const { return pole_index_; }

  virtual Vec drift(const Vec& x, const Vec& theta) const = 0;
  virtual Mat control_matrix(const Vec& x, const Vec& theta) const = 0;
  virtual Jacobians jacobians(const Vec& x, const Vec& u,
                              const Vec& theta) const = 0;

  Vec drift(const Vec& x) const { return drift(x, params_); }
  Mat control_matrix(const Vec& x) const { return control_matrix(x, params_); }
  Jacobians jacobians(const Vec& x, const Vec& u) const {
    return jacobians(x, u, params_);
  }

  Vec dynamics(const Vec& x, const Vec& u, const Vec& theta) const;
  Vec dynamics(const Vec& x, const Vec& u) const {
    return dynamics(x, u, params_);
  }

  /// One explicit Euler step of the disturbed dynamics
  ///   x' = x + dt * (a(x + xi_o; theta + xi_theta)
  ///                  + B(x + xi_o; theta + xi_theta) (u + xi_u) + xi_x).
  /// Throws IntegrationError if the next state is not finite.
  Vec step(const Vec& x, const Vec& u, const DisturbanceBundle& d,
           double dt) const;
  Vec step(const Vec& x, const Vec& u, double dt) const;

 protected:
  explicit ControlAffineModel(ModelLayout layout);

  void check_finite(const Vec& v, const char* what, const Vec& x) const;

 private:
  std::vector<JointKind> position_kinds_;
  int action_dim_;
  std::vector<std::string> param_names_;
  Vec params_;
  Bounds domain_;
  Vec desired_;
  int pole_index_;
};

// Generalized-coordinate terms M(q) qdd = bias(q, qd) + S(q) u.
struct MechanicalTerms {
  Mat mass;
  Vec bias;
  Mat actuation;
};

struct MechanicalPartials {
  std::vector<Mat> dmass_dq;   // per q_k
  Mat dbias_dq;                // dofs x dofs
  Mat dbias_dqd;               // dofs x dofs
  std::vector<Mat> dact_dq;    // per q_k
  std::vector<Mat> dmass_dp;   // per parameter
  Mat dbias_dp;                // dofs x params
  std::vector<Mat> dact_dp;    // per parameter
};

// Second-order mechanical systems. Subclasses provide the terms and their
// analytic partials; drift, control matrix and all Jacobians follow.
class MechanicalModel : public ControlAffineModel {
 public:
  Vec drift(const Vec& x, const Vec& theta) const override;
  Mat control_matrix(const Vec& x, const Vec& theta) const override;
  Jacobians jacobians(const Vec& x, const Vec& u,
                      const Vec& theta) const override;
  using ControlAffineModel::control_matrix;
  using ControlAffineModel::drift;
  using ControlAffineModel::jacobians;

 protected:
  using ControlAffineModel::ControlAffineModel;

  virtual MechanicalTerms terms(const Vec& q, const Vec& qd,
                                const Vec& theta) const = 0;
  virtual MechanicalPartials partials(const Vec& q, const Vec& qd,
                                      const Vec& theta) const = 0;
};

}  // namespace cfvi
