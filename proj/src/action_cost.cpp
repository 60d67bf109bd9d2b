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

#include "cfvi/action_cost.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "cfvi/errors.hpp"

namespace cfvi {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kHalfPi = std::numbers::pi / 2.0;

double xlogx(double x) { return x == 0.0 ? 0.0 : x * std::log(x); }

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double log_cosh(double x) {
  const double a = std::abs(x);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

double sign0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

struct Range {
  double lo;
  double hi;
  bool open;
};

Range base_range(CostFamily f) {
  switch (f) {
    case CostFamily::kLinear:
      return {-kInf, kInf, true};
    case CostFamily::kLogistic:
      return {0.0, 1.0, true};
    case CostFamily::kAtan:
      return {-kHalfPi, kHalfPi, true};
    case CostFamily::kTanh:
      return {-1.0, 1.0, true};
    case CostFamily::kBangBang:
    case CostFamily::kBangLin:
      return {-1.0, 1.0, false};
  }
  return {-kInf, kInf, true};
}

bool inside(const Range& r, double y) {
  return r.open ? (y > r.lo && y < r.hi) : (y >= r.lo && y <= r.hi);
}

// Scalar unit-scale members of the separable families. The caller checks the
// domain before calling g or grad_g.
double base_g(CostFamily f, double y) {
  switch (f) {
    case CostFamily::kLogistic:
      return xlogx(y) + xlogx(1.0 - y);
    case CostFamily::kAtan:
      return -std::log(std::cos(y));
    case CostFamily::kTanh:
      return xlogx(0.5 * (1.0 + y)) + xlogx(0.5 * (1.0 - y)) +
             std::numbers::ln2;
    case CostFamily::kBangBang:
      return 0.0;
    case CostFamily::kBangLin:
      return 0.5 * y * y;
    case CostFamily::kLinear:
      break;
  }
  return 0.0;
}

double base_grad_g(CostFamily f, double y) {
  switch (f) {
    case CostFamily::kLogistic:
      return std::log(y) - std::log1p(-y);
    case CostFamily::kAtan:
      return std::tan(y);
    case CostFamily::kTanh:
      return std::atanh(y);
    case CostFamily::kBangLin:
      return y;
    case CostFamily::kBangBang:
    case CostFamily::kLinear:
      break;
  }
  return 0.0;
}

double base_conj(CostFamily f, double w) {
  switch (f) {
    case CostFamily::kLogistic:
      return softplus(w);
    case CostFamily::kAtan:
      return w * std::atan(w) - 0.5 * std::log1p(w * w);
    case CostFamily::kTanh:
      return log_cosh(w);
    case CostFamily::kBangBang:
      return std::abs(w);
    case CostFamily::kBangLin:
      return std::abs(w) <= 1.0 ? 0.5 * w * w : std::abs(w) - 0.5;
    case CostFamily::kLinear:
      break;
  }
  return 0.0;
}

double base_policy(CostFamily f, double w) {
  switch (f) {
    case CostFamily::kLogistic:
      return 1.0 / (1.0 + std::exp(-w));
    case CostFamily::kAtan:
      return std::atan(w);
    case CostFamily::kTanh:
      return std::tanh(w);
    case CostFamily::kBangBang:
      return sign0(w);
    case CostFamily::kBangLin:
      // -1 + relu(1 + w) - relu(w - 1), evaluated without cancellation.
      return std::clamp(w, -1.0, 1.0);
    case CostFamily::kLinear:
      break;
  }
  return 0.0;
}

// Effective quadratic weight of the scaled linear family.
Mat linear_weight(const ActionCostSpec& s) {
  const Vec d = s.action_scale.cwiseSqrt().cwiseInverse();
  return d.asDiagonal() * s.R * d.asDiagonal();
}

Mat linear_weight_inverse(const ActionCostSpec& s) {
  const Vec d = s.action_scale.cwiseSqrt();
  return d.asDiagonal() * s.R.llt().solve(Mat::Identity(s.dim(), s.dim())) *
         d.asDiagonal();
}

void check_size(const ActionCostSpec& s, const Vec& v, const char* what) {
  if (v.size() != s.dim()) {
    std::ostringstream os;
    os << what << " has size " << v.size() << ", expected " << s.dim();
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

std::string family_name(CostFamily f) {
  switch (f) {
    case CostFamily::kLinear:
      return "linear";
    case CostFamily::kLogistic:
      return "logistic";
    case CostFamily::kAtan:
      return "atan";
    case CostFamily::kTanh:
      return "tanh";
    case CostFamily::kBangBang:
      return "bang_bang";
    case CostFamily::kBangLin:
      return "bang_lin";
  }
  return "unknown";
}

CostFamily parse_family(std::string_view name) {
  std::string n(name);
  std::replace(n.begin(), n.end(), '-', '_');
  for (CostFamily f : all_families()) {
    if (family_name(f) == n) return f;
  }
  throw ConfigError("unknown action cost family '" + std::string(name) + "'");
}

const std::vector<CostFamily>& all_families() {
  static const std::vector<CostFamily> kAll{
      CostFamily::kLinear, CostFamily::kLogistic, CostFamily::kAtan,
      CostFamily::kTanh,   CostFamily::kBangBang, CostFamily::kBangLin};
  return kAll;
}

ActionCostSpec ActionCostSpec::make(CostFamily family, int dim) {
  if (dim < 1) throw std::invalid_argument("action dimension must be positive");
  ActionCostSpec s;
  s.family = family;
  s.action_scale = Vec::Ones(dim);
  s.action_shift = Vec::Zero(dim);
  if (family == CostFamily::kLinear) s.R = Mat::Identity(dim, dim);
  return s;
}

ActionCostSpec ActionCostSpec::linear(const Mat& R) {
  ActionCostSpec s = make(CostFamily::kLinear, static_cast<int>(R.rows()));
  s.R = R;
  s.validate();
  return s;
}

void ActionCostSpec::validate() const {
  const int n = dim();
  if (n < 1) throw DomainError("action cost has no dimensions");
  if (action_shift.size() != n) {
    throw DomainError("action_shift size does not match action_scale");
  }
  for (int i = 0; i < n; ++i) {
    if (!(action_scale[i] > 0.0) || !std::isfinite(action_scale[i])) {
      throw DomainError("action_scale[" + std::to_string(i) +
                        "] must be positive and finite");
    }
    if (!std::isfinite(action_shift[i])) {
      throw DomainError("action_shift[" + std::to_string(i) + "] is not finite");
    }
  }
  if (!(cost_scale > 0.0) || !std::isfinite(cost_scale)) {
    throw DomainError("cost_scale must be positive and finite");
  }
  if (family == CostFamily::kLinear) {
    if (R.rows() != n || R.cols() != n) {
      throw DomainError("R must be " + std::to_string(n) + "x" +
                        std::to_string(n));
    }
    if (!R.isApprox(R.transpose(), 1e-12) ||
        R.llt().info() != Eigen::Success) {
      throw DomainError("R must be symmetric positive definite");
    }
    return;
  }
  const Range r = base_range(family);
  for (int i = 0; i < n; ++i) {
    const double y = action_shift[i] / action_scale[i];
    if (!(y >= r.lo && y <= r.hi) || !std::isfinite(base_g(family, y))) {
      throw DomainError("action_shift[" + std::to_string(i) +
                        "] leaves zero outside the cost domain");
    }
  }
}

Bounds ActionCostSpec::domain() const {
  const Range r = base_range(family);
  if (family == CostFamily::kLinear) {
    return {Vec::Constant(dim(), -kInf), Vec::Constant(dim(), kInf)};
  }
  return {r.lo * action_scale - action_shift, r.hi * action_scale - action_shift};
}

bool ActionCostSpec::open_domain() const { return base_range(family).open; }

double cost(const ActionCostSpec& spec, const Vec& u) {
  check_size(spec, u, "action");
  if (spec.family == CostFamily::kLinear) {
    if (!u.allFinite()) throw DomainError("action is not finite");
    const Mat w = linear_weight(spec);
    const Vec v = u + spec.action_shift;
    return spec.cost_scale * 0.5 *
           (v.dot(w * v) - spec.action_shift.dot(w * spec.action_shift));
  }
  const Range r = base_range(spec.family);
  double total = 0.0;
  for (int i = 0; i < spec.dim(); ++i) {
    const double a = spec.action_scale[i];
    const double y = (u[i] + spec.action_shift[i]) / a;
    if (!inside(r, y)) {
      std::ostringstream os;
      os << "action dimension " << i << " value " << u[i]
         << " is outside the domain of the " << family_name(spec.family)
         << " cost";
      throw DomainError(os.str());
    }
    total += a * (base_g(spec.family, y) -
                  base_g(spec.family, spec.action_shift[i] / a));
  }
  return spec.cost_scale * total;
}

Vec policy_shape(const ActionCostSpec& spec, const Vec& w) {
  check_size(spec, w, "projected gradient");
  const double beta = spec.cost_scale;
  if (spec.family == CostFamily::kLinear) {
    return linear_weight_inverse(spec) * (w / beta) - spec.action_shift;
  }
  const Range r = base_range(spec.family);
  Vec u(spec.dim());
  for (int i = 0; i < spec.dim(); ++i) {
    const double a = spec.action_scale[i];
    const double g = spec.action_shift[i];
    double p = base_policy(spec.family, w[i] / beta);
    double ui = a * p - g;
    if (r.open) {
      // Saturated barrier policies round onto the boundary; step back inside
      // so the action stays in the open domain of the cost.
      p = std::clamp(p, std::nextafter(r.lo, r.hi), std::nextafter(r.hi, r.lo));
      ui = a * p - g;
      for (int k = 0; k < 64 && !inside(r, (ui + g) / a); ++k) {
        ui = std::nextafter(ui, (ui + g) / a > 0.5 * (r.lo + r.hi) ? -kInf : kInf);
      }
    }
    u[i] = ui;
  }
  return u;
}

Mat policy_shape_batch(const ActionCostSpec& spec, const Mat& w) {
  Mat u(w.rows(), w.cols());
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    u.col(j) = policy_shape(spec, Vec(w.col(j)));
  }
  return u;
}

double conjugate(const ActionCostSpec& spec, const Vec& w) {
  check_size(spec, w, "projected gradient");
  const double beta = spec.cost_scale;
  const Vec& gamma = spec.action_shift;
  if (spec.family == CostFamily::kLinear) {
    const Vec v = w / beta;
    return beta * 0.5 * v.dot(linear_weight_inverse(spec) * v) - gamma.dot(w) +
           beta * 0.5 * gamma.dot(linear_weight(spec) * gamma);
  }
  double total = 0.0;
  for (int i = 0; i < spec.dim(); ++i) {
    const double a = spec.action_scale[i];
    total += beta * a * base_conj(spec.family, w[i] / beta) - gamma[i] * w[i] +
             beta * a * base_g(spec.family, gamma[i] / a);
  }
  return total;
}

Vec grad_cost(const ActionCostSpec& spec, const Vec& u) {
  check_size(spec, u, "action");
  if (spec.family == CostFamily::kBangBang) {
    throw UnsupportedOperation(
        "bang_bang cost is not differentiable (characteristic function)");
  }
  if (spec.family == CostFamily::kLinear) {
    return spec.cost_scale * linear_weight(spec) * (u + spec.action_shift);
  }
  const Range r = base_range(spec.family);
  Vec w(spec.dim());
  for (int i = 0; i < spec.dim(); ++i) {
    const double y = (u[i] + spec.action_shift[i]) / spec.action_scale[i];
    if (!inside(r, y)) {
      throw DomainError("action dimension " + std::to_string(i) +
                        " is outside the cost domain");
    }
    w[i] = spec.cost_scale * base_grad_g(spec.family, y);
  }
  return w;
}

ActionCostSpec compose(const ActionCostSpec& base, const Vec& alpha,
                       double beta, const Vec& gamma) {
  check_size(base, alpha, "alpha");
  check_size(base, gamma, "gamma");
  if ((alpha.array() <= 0.0).any() || !(beta > 0.0)) {
    throw DomainError("composition requires alpha > 0 and beta > 0");
  }
  ActionCostSpec s = base;
  s.action_scale = base.action_scale.cwiseProduct(alpha);
  s.action_shift = alpha.cwiseProduct(base.action_shift) + gamma;
  s.cost_scale = base.cost_scale * beta;
  s.validate();
  return s;
}

ActionCostSpec compose(const ActionCostSpec& base, double alpha, double beta,
                       double gamma) {
  return compose(base, Vec::Constant(base.dim(), alpha), beta,
                 Vec::Constant(base.dim(), gamma));
}

ActionCostSpec tanh_act_scaled(double alpha, int dim) {
  return compose(ActionCostSpec::make(CostFamily::kTanh, dim), alpha, 1.0, 0.0);
}

ActionCostSpec atan_act_scaled(double alpha, int dim) {
  return compose(ActionCostSpec::make(CostFamily::kAtan, dim),
                 2.0 * alpha / std::numbers::pi, 1.0, 0.0);
}

}  // namespace cfvi
