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

#include <string>
#include <string_view>
#include <vector>

#include "cfvi/dynamics.hpp"

namespace cfvi {

enum class CostFamily { kLinear, kLogistic, kAtan, kTanh, kBangBang, kBangLin };

std::string family_name(CostFamily f);
// Accepts the canonical names plus '-' in place of '_'. Throws ConfigError.
CostFamily parse_family(std::string_view name);
const std::vector<CostFamily>& all_families();

/// Action cost in canonical composed form. Per action dimension i, with
///   y_i = (u_i + shift_i) / scale_i,
/// the cost is cost_scale * scale_i * (g(y_i) - g(shift_i / scale_i)). This
/// is the base cost action-scaled by `action_scale`, shifted by
/// `action_shift`, then cost-scaled by `cost_scale`. The linear family
/// replaces the per-dimension base by 1/2 y^T R y with
/// y = diag(scale)^-1/2 (u + shift).
struct ActionCostSpec {
  CostFamily family = CostFamily::kTanh;
  Mat R;              // linear family only
  Vec action_scale;   // alpha, one entry per action dimension
  double cost_scale = 1.0;  // beta
  Vec action_shift;   // gamma

  static ActionCostSpec make(CostFamily family, int dim);
  static ActionCostSpec linear(const Mat& R);

  int dim() const { return static_cast<int>(action_scale.size()); }
  // Throws DomainError when an invariant does not hold.
  void validate() const;
  // Composed action range; infinite bounds for the linear family.
  Bounds domain() const;
  // True if the cost is a barrier (open domain).
  bool open_domain() const;
};

double cost(const ActionCostSpec& spec, const Vec& u);
// Optimal action for the projected value gradient w = B^T grad V.
Vec policy_shape(const ActionCostSpec& spec, const Vec& w);
// Columnwise policy for a batch of projected gradients.
Mat policy_shape_batch(const ActionCostSpec& spec, const Mat& w);
double conjugate(const ActionCostSpec& spec, const Vec& w);
// Throws UnsupportedOperation for bang-bang.
Vec grad_cost(const ActionCostSpec& spec, const Vec& u);

// Applies action scaling by alpha, then shifting by gamma, then cost scaling
// by beta on top of `base`.
ActionCostSpec compose(const ActionCostSpec& base, const Vec& alpha,
                       double beta, const Vec& gamma);
ActionCostSpec compose(const ActionCostSpec& base, double alpha, double beta,
                       double gamma);

// alpha * tanh(w), actions in (-alpha, alpha).
ActionCostSpec tanh_act_scaled(double alpha, int dim = 1);
// (2 alpha / pi) * atan(w), actions in (-alpha, alpha).
ActionCostSpec atan_act_scaled(double alpha, int dim = 1);

}  // namespace cfvi
