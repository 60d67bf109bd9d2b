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

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cfvi/dynamics.hpp"
#include "cfvi/rng.hpp"

namespace cfvi {

/// Maps a state to network features: continuous joints become
/// (sin q, cos q), bounded joints and velocities pass through.
class FeatureTransform {
 public:
  FeatureTransform() = default;
  explicit FeatureTransform(std::vector<JointKind> position_kinds);

  int state_dim() const { return 2 * static_cast<int>(kinds_.size()); }
  int feature_dim() const { return feature_dim_; }
  const std::vector<JointKind>& kinds() const { return kinds_; }

  Vec apply(const Vec& x) const;
  // Columnwise over a batch of states.
  Mat apply_batch(const Mat& x) const;
  // feature_dim x state_dim.
  Mat jacobian(const Vec& x) const;
  // Columnwise J(x_j)^T dz_j.
  Mat pullback(const Mat& x, const Mat& dz) const;

 private:
  std::vector<JointKind> kinds_;
  int feature_dim_ = 0;
};

enum class Activation { kTanh, kRelu, kSoftplus };
std::string activation_name(Activation a);
Activation parse_activation(const std::string& name);

/// Fully connected network on column batches with manual backpropagation.
/// Parameters live in one flat vector: per layer, W (column-major) then b.
class Mlp {
 public:
  struct Cache {
    std::vector<Mat> pre;  // pre-activations per layer
    std::vector<Mat> out;  // out[0] is the input
  };

  Mlp() = default;
  Mlp(std::vector<int> sizes, Activation activation);

  int num_params() const { return static_cast<int>(params_.size()); }
  const std::vector<int>& sizes() const { return sizes_; }
  Activation activation() const { return activation_; }
  Vec& params() { return params_; }
  const Vec& params() const { return params_; }

  // Glorot-uniform weights, zero biases; optionally a zero output layer.
  void init(Rng& rng, bool zero_output);

  Mat forward(const Mat& in, Cache* cache = nullptr) const;
  // Accumulates dLoss/dparams into *grad when non-null and returns
  // dLoss/dinput when need_input is set.
  Mat backward(const Cache& cache, const Mat& dout, Vec* grad,
               bool need_input) const;

 private:
  Eigen::Map<const Mat> weight(int layer) const;
  Eigen::Map<const Vec> bias(int layer) const;
  int layers() const { return static_cast<int>(sizes_.size()) - 1; }

  std::vector<int> sizes_;
  std::vector<int> offsets_;
  Activation activation_ = Activation::kTanh;
  Vec params_;
};

struct ValueNetConfig {
  // "quadratic": V = -|Lbar(z)^T (h(x) - h(x_des))|^2 with Lbar the ensemble
  // mean of lower-triangular heads. "mlp": ensemble mean of scalar outputs.
  std::string architecture = "quadratic";
  int ensemble = 4;
  std::vector<int> hidden{64, 64};
  Activation activation = Activation::kTanh;
  double diag_eps = 1e-3;
  bool zero_output = false;
};

struct FitConfig {
  int epochs = 20;
  int batch_size = 256;
  double learning_rate = 1e-3;
  double p = 2.0;  // order of the l_p fitting loss
};

struct AdamState {
  std::vector<Vec> m;
  std::vector<Vec> v;
  long long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class ValueEnsemble {
 public:
  ValueEnsemble(FeatureTransform features, Vec x_des, ValueNetConfig config,
                std::uint64_t seed);

  const ValueNetConfig& config() const { return config_; }
  const FeatureTransform& features() const { return features_; }
  const Vec& x_des() const { return x_des_; }
  int members() const { return static_cast<int>(nets_.size()); }
  bool quadratic() const { return quadratic_; }
  std::vector<Mlp>& nets() { return nets_; }
  const std::vector<Mlp>& nets() const { return nets_; }

  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  // Batched over columns. `grads` may be null.
  Vec values(const Mat& x) const;
  Vec values_and_gradients(const Mat& x, Mat* grads) const;

  // Mean lower-triangular matrix at features z (quadratic architecture).
  Mat ensemble_L(const Vec& z) const;
  Mat member_L(int member, const Vec& z) const;

  // Mean of |V - target|^p over the batch.
  double loss(const Mat& x, const Vec& targets, double p) const;

  /// Minibatch Adam on the l_p loss; returns the mean training loss of the
  /// last epoch. Throws TrainingDivergence (carrying `iteration`) when the
  /// loss or parameters become non-finite; parameters are then restored.
  double fit(const Mat& x, const Vec& targets, const FitConfig& cfg,
             AdamState* adam, Rng& rng, int iteration = 0);

  // One Adam step on the full batch; returns the loss before the step.
  double fit_step(const Mat& x, const Vec& targets, const FitConfig& cfg,
                  AdamState* adam);

 private:
  // Loss gradient w.r.t. parameters of every member for batch columns.
  double loss_and_param_grads(const Mat& x, const Vec& targets, double p,
                              std::vector<Vec>* grads) const;
  // Maps batch values to per-column loss weights dLoss/dV.
  using DvalueFn = std::function<Vec(const Vec&)>;
  // Shared forward/backward; dvalue_fn is required when param_grads is set.
  Vec evaluate(const Mat& x, const DvalueFn* dvalue_fn,
               std::vector<Vec>* param_grads, Mat* input_grads) const;
  Mat head_matrix(const Vec& o) const;
  void adam_update(const std::vector<Vec>& grads, double lr, AdamState* adam);

  FeatureTransform features_;
  Vec x_des_;
  Vec z_des_;
  ValueNetConfig config_;
  bool quadratic_ = true;
  std::vector<Mlp> nets_;
};

int tri_size(int n);

}  // namespace cfvi
