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

#include <cmath>
#include <cstring>
#include <functional>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "cfvi/errors.hpp"
#include "cfvi/models.hpp"
#include "test_support.hpp"

namespace cfvi {
namespace {

using testing::central_jacobian;
using testing::relative_error;
using testing::uniform_in;
using testing::uniform_vec;
using Vec3 = Eigen::Vector3d;

constexpr double kPi = std::numbers::pi;

// Independent equations-of-motion oracle. Each body is a set of point masses
// whose Cartesian positions are given as functions of q; rods use two-point
// Gauss-Legendre nodes, which integrate the (quadratic in arc length) kinetic
// energy exactly. The Euler-Lagrange equations are evaluated by finite
// differences, so none of the analytic mass matrix or Coriolis algebra of the
// models is reused.
struct PointMass {
  double mass;
  std::function<Vec3(const Vec&)> position;
};

struct LagrangianOracle {
  std::vector<PointMass> points;
  double gravity;
  std::function<Vec(const Vec& q, const Vec& qd, const Vec& u)> forces;

  Mat point_jacobian(const PointMass& p, const Vec& q) const {
    const double h = 1e-5;
    Mat j(3, q.size());
    for (Eigen::Index k = 0; k < q.size(); ++k) {
      Vec qp = q, qm = q;
      qp[k] += h;
      qm[k] -= h;
      j.col(k) = (p.position(qp) - p.position(qm)) / (2.0 * h);
    }
    return j;
  }

  Mat mass_matrix(const Vec& q) const {
    Mat m = Mat::Zero(q.size(), q.size());
    for (const auto& p : points) {
      const Mat j = point_jacobian(p, q);
      m += p.mass * j.transpose() * j;
    }
    return m;
  }

  double potential(const Vec& q) const {
    double v = 0.0;
    for (const auto& p : points) v += p.mass * gravity * p.position(q).z();
    return v;
  }

  Vec acceleration(const Vec& q, const Vec& qd, const Vec& u) const {
    const auto n = q.size();
    const double h = 1e-3;
    const Mat m = mass_matrix(q);
    Mat mdot = Mat::Zero(n, n);
    Vec dt_dq(n), dv_dq(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      Vec qp = q, qm = q;
      qp[k] += h;
      qm[k] -= h;
      const Mat dm = (mass_matrix(qp) - mass_matrix(qm)) / (2.0 * h);
      mdot += dm * qd[k];
      dt_dq[k] = 0.5 * qd.dot(dm * qd);
      dv_dq[k] = (potential(qp) - potential(qm)) / (2.0 * h);
    }
    const Vec rhs = forces(q, qd, u) - mdot * qd + dt_dq - dv_dq;
    return m.ldlt().solve(rhs);
  }
};

void add_rod(std::vector<PointMass>* pts, double mass,
             std::function<Vec3(const Vec&)> start,
             std::function<Vec3(const Vec&)> direction, double s0, double s1) {
  const double c = 0.5 * (s0 + s1);
  const double half = 0.5 * (s1 - s0) / std::sqrt(3.0);
  for (double s : {c - half, c + half}) {
    pts->push_back({0.5 * mass, [start, direction, s](const Vec& q) {
                      return Vec3(start(q) + s * direction(q));
                    }});
  }
}

LagrangianOracle pendulum_oracle(const ControlAffineModel& m) {
  const double mass = m.param("mass"), l = m.param("length");
  const double b = m.param("damping");
  LagrangianOracle o;
  o.gravity = m.param("gravity");
  o.points.push_back({mass, [l](const Vec& q) {
                        return Vec3(l * std::sin(q[0]), 0.0, l * std::cos(q[0]));
                      }});
  o.forces = [b](const Vec&, const Vec& qd, const Vec& u) {
    Vec f(1);
    f << u[0] - b * qd[0];
    return f;
  };
  return o;
}

LagrangianOracle cartpole_oracle(const ControlAffineModel& m) {
  LagrangianOracle o;
  o.gravity = m.param("gravity");
  o.points.push_back({m.param("cart_mass"),
                      [](const Vec& q) { return Vec3(q[0], 0.0, 0.0); }});
  add_rod(
      &o.points, m.param("pole_mass"),
      [](const Vec& q) { return Vec3(q[0], 0.0, 0.0); },
      [](const Vec& q) { return Vec3(std::sin(q[1]), 0.0, std::cos(q[1])); },
      0.0, m.param("pole_length"));
  const double ku = m.param("force_gain"), kv = m.param("back_emf_gain");
  const double beq = m.param("cart_damping"), bp = m.param("pole_damping");
  o.forces = [=](const Vec&, const Vec& qd, const Vec& u) {
    Vec f(2);
    f << ku * u[0] - (beq + kv) * qd[0], -bp * qd[1];
    return f;
  };
  return o;
}

LagrangianOracle furuta_oracle(const ControlAffineModel& m) {
  LagrangianOracle o;
  o.gravity = m.param("gravity");
  const double lr = m.param("arm_length"), lp = m.param("pendulum_length");
  auto arm_dir = [](const Vec& q) {
    return Vec3(std::cos(q[0]), std::sin(q[0]), 0.0);
  };
  add_rod(
      &o.points, m.param("arm_mass"), [](const Vec&) { return Vec3::Zero().eval(); },
      arm_dir, -0.5 * lr, 0.5 * lr);
  add_rod(
      &o.points, m.param("pendulum_mass"),
      [lr, arm_dir](const Vec& q) { return Vec3(lr * arm_dir(q)); },
      [](const Vec& q) {
        return Vec3(-std::sin(q[1]) * std::sin(q[0]),
                    std::sin(q[1]) * std::cos(q[0]), std::cos(q[1]));
      },
      0.0, lp);
  const double km = m.param("motor_constant"), rm = m.param("motor_resistance");
  const double dr = m.param("arm_damping"), dp = m.param("pendulum_damping");
  o.forces = [=](const Vec&, const Vec& qd, const Vec& u) {
    Vec f(2);
    f << km * (u[0] - km * qd[0]) / rm - dr * qd[0], -dp * qd[1];
    return f;
  };
  return o;
}

TEST(WrapAngles, HalfOpenInterval) {
  EXPECT_DOUBLE_EQ(wrap_angle(3.0 * kPi), -kPi);
  EXPECT_DOUBLE_EQ(wrap_angle(0.5), 0.5);
  EXPECT_DOUBLE_EQ(wrap_angle(-kPi), -kPi);
  EXPECT_LT(wrap_angle(kPi), kPi);
}

TEST(WrapAngles, OnlyContinuousDimsAndPeriodicity) {
  std::mt19937_64 rng(3);
  const std::vector<JointKind> kinds{JointKind::kBounded, JointKind::kContinuous};
  for (int i = 0; i < 200; ++i) {
    const Vec x = uniform_vec(4, -20.0, 20.0, rng);
    const Vec w = wrap_angles(x, kinds);
    EXPECT_EQ(w[0], x[0]);
    EXPECT_EQ(w[2], x[2]);
    EXPECT_EQ(w[3], x[3]);
    EXPECT_GE(w[1], -kPi);
    EXPECT_LT(w[1], kPi);
    EXPECT_NEAR(std::sin(w[1]), std::sin(x[1]), 1e-12);
    EXPECT_NEAR(std::cos(w[1]), std::cos(x[1]), 1e-12);
  }
  State s(Vec::Constant(2, 7.0), Vec::Constant(2, 1.0), kinds);
  const State ws = wrap_angles(s);
  EXPECT_EQ(ws.q[0], 7.0);
  EXPECT_NEAR(ws.q[1], 7.0 - 2.0 * kPi, 1e-15);
  EXPECT_EQ(s.q[1], 7.0);
}

TEST(StateType, RejectsMismatchedDims) {
  EXPECT_THROW(State(Vec::Zero(2), Vec::Zero(1), {JointKind::kBounded}),
               std::invalid_argument);
  const State s = State::from_flat(Vec::LinSpaced(4, 0, 3),
                                   {JointKind::kBounded, JointKind::kContinuous});
  EXPECT_EQ(s.qd[1], 3.0);
  EXPECT_EQ(s.flat(), Vec::LinSpaced(4, 0, 3));
}

TEST(Pendulum, EquilibriaHaveZeroDrift) {
  Pendulum p;
  Vec hanging(2), upright = Vec::Zero(2);
  hanging << kPi, 0.0;
  EXPECT_LT(p.drift(hanging).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(p.drift(upright), Vec::Zero(2));
}

TEST(Pendulum, ControlMatrixIsInverseInertia) {
  Pendulum p({{"mass", 2.0}, {"length", 0.5}});
  const double inertia = 2.0 * 0.25;
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    const Mat b = p.control_matrix(uniform_in(p.domain(), rng));
    EXPECT_EQ(b(0, 0), 0.0);
    EXPECT_NEAR(b(1, 0), 1.0 / inertia, 1e-15);
  }
}

TEST(Pendulum, LinearizationAtHangingEquilibrium) {
  Pendulum p({{"damping", 0.3}});
  Vec hanging(2);
  hanging << kPi, 0.0;
  const Jacobians j = p.jacobians(hanging, Vec::Zero(1));
  Mat expected(2, 2);
  const double g = 9.81, l = 1.0, inertia = 1.0;
  expected << 0.0, 1.0, -g / l, -0.3 / inertia;
  EXPECT_LT((j.da_dx - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Pendulum, ControlMatrixIndependentOfGravity) {
  Pendulum p;
  std::mt19937_64 rng(2);
  const int g = p.param_index("gravity");
  const int b = p.param_index("damping");
  for (int i = 0; i < 20; ++i) {
    const Jacobians j = p.jacobians(uniform_in(p.domain(), rng), Vec::Ones(1));
    EXPECT_TRUE(j.dB_dtheta[g].isZero(0.0));
    EXPECT_TRUE(j.dB_dtheta[b].isZero(0.0));
  }
}

TEST(Models, PositionRowsOfControlMatrixAreZero) {
  std::mt19937_64 rng(4);
  for (const auto& name : model_names()) {
    const auto m = make_model(name);
    for (int i = 0; i < 50; ++i) {
      const Mat b = m->control_matrix(uniform_in(m->domain(), rng));
      ASSERT_EQ(b.rows(), m->state_dim());
      ASSERT_EQ(b.cols(), m->action_dim());
      EXPECT_TRUE(b.topRows(m->dofs()).isZero(0.0)) << name;
    }
  }
}

TEST(EquationsOfMotion, MatchLagrangianOracle) {
  struct Case {
    const char* name;
    std::function<LagrangianOracle(const ControlAffineModel&)> oracle;
  };
  const std::vector<Case> cases{{"pendulum", pendulum_oracle},
                                {"cartpole", cartpole_oracle},
                                {"furuta", furuta_oracle}};
  std::mt19937_64 rng(5);
  for (const auto& c : cases) {
    const auto m = make_model(c.name);
    const LagrangianOracle oracle = c.oracle(*m);
    const int n = m->dofs();
    for (int i = 0; i < 50; ++i) {
      const Vec x = uniform_in(m->domain(), rng);
      const Vec u = uniform_vec(m->action_dim(), -5.0, 5.0, rng);
      const Vec f = m->dynamics(x, u);
      const Vec qdd = oracle.acceleration(x.head(n), x.tail(n), u);
      EXPECT_LT(relative_error(f.tail(n), qdd), 1e-5) << c.name;
      EXPECT_EQ(f.head(n), x.tail(n));
      // Control column against a central difference in u on the full model.
      const Mat b_fd = central_jacobian(
          [&](const Vec& uu) {
            Vec acc(2 * n);
            acc << x.tail(n), oracle.acceleration(x.head(n), x.tail(n), uu);
            return acc;
          },
          u, 1e-3);
      EXPECT_LT(relative_error(m->control_matrix(x), b_fd), 1e-5) << c.name;
    }
  }
}

TEST(Jacobians, MatchCentralDifferences) {
  std::mt19937_64 rng(6);
  const double h = 1e-5;
  for (const auto& name : model_names()) {
    const auto m = make_model(name);
    const Vec theta = m->params();
    const int nx = m->state_dim();
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const Vec x = uniform_in(m->domain(), rng);
      const Vec u = uniform_vec(m->action_dim(), -5.0, 5.0, rng);
      const Jacobians j = m->jacobians(x, u, theta);
      ASSERT_EQ(j.da_dx.rows(), nx);
      ASSERT_EQ(j.da_dx.cols(), nx);
      ASSERT_EQ(static_cast<int>(j.dB_dx.size()), nx);
      ASSERT_EQ(static_cast<int>(j.dB_dtheta.size()), m->param_dim());

      worst = std::max(worst, relative_error(j.da_dx, central_jacobian(
          [&](const Vec& y) { return m->drift(y, theta); }, x, h)));
      worst = std::max(worst, relative_error(j.da_dtheta, central_jacobian(
          [&](const Vec& t) { return m->drift(x, t); }, theta, h)));
      for (int a = 0; a < m->action_dim(); ++a) {
        const Mat db_dx = central_jacobian(
            [&](const Vec& y) { return Vec(m->control_matrix(y, theta).col(a)); },
            x, h);
        const Mat db_dt = central_jacobian(
            [&](const Vec& t) { return Vec(m->control_matrix(x, t).col(a)); },
            theta, h);
        for (int k = 0; k < nx; ++k) {
          worst = std::max(worst, relative_error(j.dB_dx[k].col(a), db_dx.col(k)));
        }
        for (int k = 0; k < m->param_dim(); ++k) {
          worst = std::max(worst,
                           relative_error(j.dB_dtheta[k].col(a), db_dt.col(k)));
        }
      }
    }
    EXPECT_LT(worst, 1e-4) << name;
  }
}

TEST(Dynamics, ControlAffinity) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lam(0.0, 1.0);
  for (const auto& name : model_names()) {
    const auto m = make_model(name);
    for (int i = 0; i < 200; ++i) {
      const Vec x = uniform_in(m->domain(), rng);
      const Vec u1 = uniform_vec(m->action_dim(), -10.0, 10.0, rng);
      const Vec u2 = uniform_vec(m->action_dim(), -10.0, 10.0, rng);
      const double l = lam(rng);
      const Vec lhs = m->dynamics(x, l * u1 + (1.0 - l) * u2);
      const Vec rhs = l * m->dynamics(x, u1) + (1.0 - l) * m->dynamics(x, u2);
      EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(),
                1e-10 * std::max(1.0, rhs.cwiseAbs().maxCoeff()))
          << name;
    }
  }
}

TEST(Step, EquilibriumIsFixedPoint) {
  Pendulum p;
  const Vec x = Vec::Zero(2);
  EXPECT_EQ(p.step(x, Vec::Zero(1), 0.01), x);
}

TEST(Step, ZeroDtIsIdentity) {
  std::mt19937_64 rng(8);
  for (const auto& name : model_names()) {
    const auto m = make_model(name);
    const Vec x = uniform_in(m->domain(), rng);
    EXPECT_EQ(m->step(x, Vec::Ones(m->action_dim()), 0.0), x);
  }
  Pendulum p;
  EXPECT_THROW(p.step(Vec::Zero(2), Vec::Zero(1), -1.0), std::invalid_argument);
}

TEST(Step, ZeroBundleIsBitIdenticalToAbsentBundle) {
  std::mt19937_64 rng(9);
  for (const auto& name : model_names()) {
    const auto m = make_model(name);
    DisturbanceBundle zeros{Vec::Zero(m->state_dim()), Vec::Zero(m->action_dim()),
                            Vec::Zero(m->state_dim()), Vec::Zero(m->param_dim())};
    for (int i = 0; i < 100; ++i) {
      const Vec x = uniform_in(m->domain(), rng);
      const Vec u = uniform_vec(m->action_dim(), -3.0, 3.0, rng);
      const Vec a = m->step(x, u, 0.01);
      const Vec b = m->step(x, u, zeros, 0.01);
      ASSERT_EQ(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()), 0);
    }
  }
}

TEST(Step, DisturbanceInsertionPoints) {
  Pendulum p;
  std::mt19937_64 rng(10);
  const double dt = 0.01;
  for (int i = 0; i < 50; ++i) {
    const Vec x = uniform_in(p.domain(), rng);
    const Vec u = uniform_vec(1, -2.0, 2.0, rng);
    const Vec xi_x = uniform_vec(2, -1.0, 1.0, rng);
    const Vec xi_u = uniform_vec(1, -1.0, 1.0, rng);
    const Vec xi_o = uniform_vec(2, -0.1, 0.1, rng);
    const Vec xi_t = uniform_vec(4, -0.1, 0.1, rng);
    DisturbanceBundle d{xi_x, xi_u, xi_o, xi_t};
    const Vec th = p.params() + xi_t;
    const Vec expected =
        x + dt * (p.drift(x + xi_o, th) + p.control_matrix(x + xi_o, th) * (u + xi_u)) +
        dt * xi_x;
    EXPECT_LT((p.step(x, u, d, dt) - expected).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Step, EulerErrorIsSecondOrderPerStep) {
  // Reference: the same zero-order-hold action integrated with dt/100 substeps.
  Cartpole m;
  std::mt19937_64 rng(11);
  for (int i = 0; i < 10; ++i) {
    const Vec x = uniform_in(m.domain(), rng) * 0.5;
    const Vec u = uniform_vec(1, -3.0, 3.0, rng);
    auto error = [&](double dt) {
      Vec fine = x;
      for (int k = 0; k < 100; ++k) fine = m.step(fine, u, dt / 100.0);
      return (m.step(x, u, dt) - fine).norm();
    };
    const double e1 = error(1e-3), e2 = error(5e-4);
    EXPECT_NEAR(e1 / e2, 4.0, 0.2);
  }
}

TEST(Step, BlowUpCarriesState) {
  Pendulum p;
  Vec x(2);
  x << 1.0, 1.0;
  try {
    p.step(x, Vec::Zero(1), 1e308);
    FAIL() << "expected IntegrationError";
  } catch (const IntegrationError& e) {
    EXPECT_FALSE(e.state().allFinite());
  }
}

TEST(Models, Factory) {
  EXPECT_THROW(make_model("acrobot"), ConfigError);
  EXPECT_THROW(make_model("pendulum", {{"massss", 1.0}}), ConfigError);
  const auto m = make_model("cartpole", {{"pole_mass", 0.2}});
  EXPECT_EQ(m->param("pole_mass"), 0.2);
  EXPECT_THROW(m->param_index("nope"), std::out_of_range);
  EXPECT_THROW(Pendulum({{"mass", std::nan("")}}), ModelError);
}

}  // namespace
}  // namespace cfvi
