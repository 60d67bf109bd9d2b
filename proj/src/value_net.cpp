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

#include "cfvi/value_net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cfvi/errors.hpp"

namespace cfvi {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

int tri_index(int a, int b) { return a * (a + 1) / 2 + b; }

}  // namespace

int tri_size(int n) { return n * (n + 1) / 2; }

FeatureTransform::FeatureTransform(std::vector<JointKind> position_kinds)
    : kinds_(std::move(position_kinds)) {
  feature_dim_ = 0;
  for (JointKind k : kinds_) feature_dim_ += k == JointKind::kContinuous ? 2 : 1;
  feature_dim_ += static_cast<int>(kinds_.size());
}

Vec FeatureTransform::apply(const Vec& x) const {
  return apply_batch(x);
}

Mat FeatureTransform::apply_batch(const Mat& x) const {
  const int n = static_cast<int>(kinds_.size());
  if (x.rows() != 2 * n) throw std::invalid_argument("state dimension mismatch");
  Mat z(feature_dim_, x.cols());
  int row = 0;
  for (int k = 0; k < n; ++k) {
    if (kinds_[k] == JointKind::kContinuous) {
      z.row(row++) = x.row(k).array().sin();
      z.row(row++) = x.row(k).array().cos();
    } else {
      z.row(row++) = x.row(k);
    }
  }
  z.bottomRows(n) = x.bottomRows(n);
  return z;
}

Mat FeatureTransform::jacobian(const Vec& x) const {
  const int n = static_cast<int>(kinds_.size());
  Mat j = Mat::Zero(feature_dim_, 2 * n);
  int row = 0;
  for (int k = 0; k < n; ++k) {
    if (kinds_[k] == JointKind::kContinuous) {
      j(row++, k) = std::cos(x[k]);
      j(row++, k) = -std::sin(x[k]);
    } else {
      j(row++, k) = 1.0;
    }
  }
  j.bottomRightCorner(n, n).setIdentity();
  return j;
}

Mat FeatureTransform::pullback(const Mat& x, const Mat& dz) const {
  const int n = static_cast<int>(kinds_.size());
  Mat dx(2 * n, x.cols());
  int row = 0;
  for (int k = 0; k < n; ++k) {
    if (kinds_[k] == JointKind::kContinuous) {
      dx.row(k) = dz.row(row).array() * x.row(k).array().cos() -
                  dz.row(row + 1).array() * x.row(k).array().sin();
      row += 2;
    } else {
      dx.row(k) = dz.row(row++);
    }
  }
  dx.bottomRows(n) = dz.bottomRows(n);
  return dx;
}

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::kTanh:
      return "tanh";
    case Activation::kRelu:
      return "relu";
    case Activation::kSoftplus:
      return "softplus";
  }
  return "tanh";
}

Activation parse_activation(const std::string& name) {
  for (Activation a : {Activation::kTanh, Activation::kRelu, Activation::kSoftplus}) {
    if (activation_name(a) == name) return a;
  }
  throw ConfigError("unknown activation '" + name + "'");
}

Mlp::Mlp(std::vector<int> sizes, Activation activation)
    : sizes_(std::move(sizes)), activation_(activation) {
  if (sizes_.size() < 2) throw std::invalid_argument("network needs >= 2 layers");
  int total = 0;
  for (int l = 0; l + 1 < static_cast<int>(sizes_.size()); ++l) {
    if (sizes_[l] < 1 || sizes_[l + 1] < 1) {
      throw std::invalid_argument("layer sizes must be positive");
    }
    offsets_.push_back(total);
    total += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
  }
  params_ = Vec::Zero(total);
}

Eigen::Map<const Mat> Mlp::weight(int l) const {
  return {params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]};
}

Eigen::Map<const Vec> Mlp::bias(int l) const {
  return {params_.data() + offsets_[l] + sizes_[l + 1] * sizes_[l], sizes_[l + 1]};
}

void Mlp::init(Rng& rng, bool zero_output) {
  params_.setZero();
  for (int l = 0; l < layers(); ++l) {
    if (zero_output && l == layers() - 1) break;
    const double limit = std::sqrt(6.0 / (sizes_[l] + sizes_[l + 1]));
    std::uniform_real_distribution<double> u(-limit, limit);
    const int count = sizes_[l + 1] * sizes_[l];
    for (int k = 0; k < count; ++k) params_[offsets_[l] + k] = u(rng);
  }
}

Mat Mlp::forward(const Mat& in, Cache* cache) const {
  if (in.rows() != sizes_.front()) throw std::invalid_argument("input size mismatch");
  if (cache) {
    cache->pre.clear();
    cache->out.clear();
    cache->out.push_back(in);
  }
  Mat h = in;
  for (int l = 0; l < layers(); ++l) {
    Mat pre = (weight(l) * h).colwise() + bias(l);
    if (l + 1 == layers()) {
      h = pre;
    } else {
      switch (activation_) {
        case Activation::kTanh:
          h = pre.array().tanh();
          break;
        case Activation::kRelu:
          h = pre.cwiseMax(0.0);
          break;
        case Activation::kSoftplus:
          h = pre.unaryExpr([](double v) { return softplus(v); });
          break;
      }
    }
    if (cache) {
      cache->pre.push_back(std::move(pre));
      cache->out.push_back(h);
    }
  }
  return h;
}

Mat Mlp::backward(const Cache& cache, const Mat& dout, Vec* grad,
                  bool need_input) const {
  Mat delta = dout;
  for (int l = layers() - 1; l >= 0; --l) {
    if (grad) {
      const int off = offsets_[l];
      const int wsize = sizes_[l + 1] * sizes_[l];
      Eigen::Map<Mat>(grad->data() + off, sizes_[l + 1], sizes_[l]) +=
          delta * cache.out[l].transpose();
      grad->segment(off + wsize, sizes_[l + 1]) += delta.rowwise().sum();
    }
    if (l == 0 && !need_input) return {};
    Mat dprev = weight(l).transpose() * delta;
    if (l == 0) return dprev;
    const Mat& pre = cache.pre[l - 1];
    switch (activation_) {
      case Activation::kTanh:
        delta = dprev.array() * (1.0 - cache.out[l].array().square());
        break;
      case Activation::kRelu:
        delta = dprev.array() * (pre.array() > 0.0).cast<double>();
        break;
      case Activation::kSoftplus:
        delta = dprev.array() * pre.unaryExpr([](double v) { return sigmoid(v); }).array();
        break;
    }
  }
  return {};
}

ValueEnsemble::ValueEnsemble(FeatureTransform features, Vec x_des,
                             ValueNetConfig config, std::uint64_t seed)
    : features_(std::move(features)),
      x_des_(std::move(x_des)),
      config_(std::move(config)) {
  if (x_des_.size() != features_.state_dim()) {
    throw std::invalid_argument("desired state dimension mismatch");
  }
  if (config_.architecture == "quadratic") {
    quadratic_ = true;
  } else if (config_.architecture == "mlp") {
    quadratic_ = false;
  } else {
    throw ConfigError("unknown value network architecture '" +
                      config_.architecture + "'");
  }
  if (config_.ensemble < 1) throw ConfigError("ensemble size must be >= 1");
  if (!(config_.diag_eps > 0.0)) throw ConfigError("diag_eps must be > 0");
  z_des_ = features_.apply(x_des_);
  const int n = features_.feature_dim();
  std::vector<int> sizes{n};
  for (int h : config_.hidden) sizes.push_back(h);
  sizes.push_back(quadratic_ ? tri_size(n) : 1);
  for (int i = 0; i < config_.ensemble; ++i) {
    nets_.emplace_back(sizes, config_.activation);
    Rng rng = make_rng(seed, stream::kInit, static_cast<std::uint64_t>(i));
    nets_.back().init(rng, config_.zero_output);
  }
}

Mat ValueEnsemble::head_matrix(const Vec& o) const {
  const int n = features_.feature_dim();
  Mat l = Mat::Zero(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < a; ++b) l(a, b) = o[tri_index(a, b)];
    l(a, a) = softplus(o[tri_index(a, a)]) + config_.diag_eps;
  }
  return l;
}

Mat ValueEnsemble::member_L(int member, const Vec& z) const {
  if (!quadratic_) throw UnsupportedOperation("mlp architecture has no L");
  return head_matrix(nets_.at(member).forward(z).col(0));
}

Mat ValueEnsemble::ensemble_L(const Vec& z) const {
  if (!quadratic_) throw UnsupportedOperation("mlp architecture has no L");
  Mat l = Mat::Zero(z.size(), z.size());
  for (int i = 0; i < members(); ++i) l += member_L(i, z);
  return l / members();
}

Vec ValueEnsemble::evaluate(const Mat& x, const DvalueFn* dvalue_fn,
                            std::vector<Vec>* param_grads,
                            Mat* input_grads) const {
  const int batch = static_cast<int>(x.cols());
  const int n = features_.feature_dim();
  const int nm = members();
  const double inv = 1.0 / nm;
  const bool backprop = param_grads || input_grads;
  const Mat z = features_.apply_batch(x);
  std::vector<Mlp::Cache> caches(nm);
  std::vector<Mat> outs(nm);
  for (int i = 0; i < nm; ++i) {
    outs[i] = nets_[i].forward(z, backprop ? &caches[i] : nullptr);
  }
  Vec v = Vec::Zero(batch);

  if (!quadratic_) {
    for (int i = 0; i < nm; ++i) v += inv * outs[i].row(0).transpose();
    if (input_grads) {
      Mat dz = Mat::Zero(n, batch);
      const Mat dout = Mat::Constant(1, batch, inv);
      for (int i = 0; i < nm; ++i) dz += nets_[i].backward(caches[i], dout, nullptr, true);
      *input_grads = features_.pullback(x, dz);
    }
    if (param_grads) {
      const Mat dout = inv * (*dvalue_fn)(v).transpose();
      for (int i = 0; i < nm; ++i) {
        nets_[i].backward(caches[i], dout, &(*param_grads)[i], false);
      }
    }
    return v;
  }

  const int m = tri_size(n);
  Mat dz_direct(n, batch);
  Mat dl(m, batch);  // dV / dLbar in packed lower-triangular order
  for (int j = 0; j < batch; ++j) {
    Mat lbar = Mat::Zero(n, n);
    for (int i = 0; i < nm; ++i) lbar += head_matrix(outs[i].col(j));
    lbar *= inv;
    const Vec r = z.col(j) - z_des_;
    const Vec y = lbar.transpose() * r;
    v[j] = -y.squaredNorm();
    if (backprop) {
      dz_direct.col(j) = -2.0 * lbar * y;
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b <= a; ++b) dl(tri_index(a, b), j) = -2.0 * r[a] * y[b];
      }
    }
  }
  if (!backprop) return v;

  // dV/d(member output): mean over members, softplus on the diagonal.
  auto member_dout = [&](int i) {
    Mat d = inv * dl;
    for (int a = 0; a < n; ++a) {
      const int k = tri_index(a, a);
      d.row(k).array() *= outs[i].row(k).unaryExpr([](double o) { return sigmoid(o); }).array();
    }
    return d;
  };
  if (input_grads) {
    Mat dz = dz_direct;
    for (int i = 0; i < nm; ++i) {
      dz += nets_[i].backward(caches[i], member_dout(i), nullptr, true);
    }
    *input_grads = features_.pullback(x, dz);
  }
  if (param_grads) {
    const Vec dvalue = (*dvalue_fn)(v);
    for (int i = 0; i < nm; ++i) {
      const Mat d = member_dout(i) * dvalue.asDiagonal();
      nets_[i].backward(caches[i], d, &(*param_grads)[i], false);
    }
  }
  return v;
}

double ValueEnsemble::value(const Vec& x) const { return values(x)[0]; }

Vec ValueEnsemble::gradient(const Vec& x) const {
  Mat g;
  values_and_gradients(x, &g);
  return g.col(0);
}

Vec ValueEnsemble::values(const Mat& x) const {
  return evaluate(x, nullptr, nullptr, nullptr);
}

Vec ValueEnsemble::values_and_gradients(const Mat& x, Mat* grads) const {
  return evaluate(x, nullptr, nullptr, grads);
}

double ValueEnsemble::loss(const Mat& x, const Vec& targets, double p) const {
  const Vec e = values(x) - targets;
  return e.array().abs().pow(p).mean();
}

double ValueEnsemble::loss_and_param_grads(const Mat& x, const Vec& targets,
                                           double p,
                                           std::vector<Vec>* grads) const {
  double loss = 0.0;
  const DvalueFn dloss = [&](const Vec& v) {
    const Vec e = v - targets;
    const double n = static_cast<double>(e.size());
    Vec dv(e.size());
    for (Eigen::Index j = 0; j < e.size(); ++j) {
      const double a = std::abs(e[j]);
      const double s = e[j] > 0.0 ? 1.0 : (e[j] < 0.0 ? -1.0 : 0.0);
      dv[j] = p * std::pow(a, p - 1.0) * s / n;
    }
    loss = e.array().abs().pow(p).mean();
    return dv;
  };
  grads->assign(members(), Vec());
  for (int i = 0; i < members(); ++i) (*grads)[i] = Vec::Zero(nets_[i].num_params());
  evaluate(x, &dloss, grads, nullptr);
  return loss;
}

void ValueEnsemble::adam_update(const std::vector<Vec>& grads, double lr,
                                AdamState* adam) {
  if (adam->m.size() != nets_.size()) {
    adam->m.clear();
    adam->v.clear();
    for (const auto& net : nets_) {
      adam->m.push_back(Vec::Zero(net.num_params()));
      adam->v.push_back(Vec::Zero(net.num_params()));
    }
    adam->step = 0;
  }
  ++adam->step;
  const double c1 = 1.0 - std::pow(adam->beta1, static_cast<double>(adam->step));
  const double c2 = 1.0 - std::pow(adam->beta2, static_cast<double>(adam->step));
  for (int i = 0; i < members(); ++i) {
    adam->m[i] = adam->beta1 * adam->m[i] + (1.0 - adam->beta1) * grads[i];
    adam->v[i] = adam->beta2 * adam->v[i] +
                 (1.0 - adam->beta2) * grads[i].cwiseProduct(grads[i]);
    nets_[i].params().array() -=
        lr * (adam->m[i].array() / c1) /
        ((adam->v[i].array() / c2).sqrt() + adam->eps);
  }
}

double ValueEnsemble::fit_step(const Mat& x, const Vec& targets,
                               const FitConfig& cfg, AdamState* adam) {
  std::vector<Vec> grads;
  const double l = loss_and_param_grads(x, targets, cfg.p, &grads);
  adam_update(grads, cfg.learning_rate, adam);
  return l;
}

double ValueEnsemble::fit(const Mat& x, const Vec& targets, const FitConfig& cfg,
                          AdamState* adam, Rng& rng, int iteration) {
  if (x.cols() == 0 || x.cols() != targets.size()) {
    throw std::invalid_argument("fit needs a nonempty batch with one target per state");
  }
  if (!targets.allFinite()) {
    throw TrainingDivergence("non-finite value targets", iteration);
  }
  std::vector<Vec> backup;
  for (const auto& net : nets_) backup.push_back(net.params());
  const AdamState adam_backup = *adam;
  const int n = static_cast<int>(x.cols());
  const int bs = std::clamp(cfg.batch_size, 1, n);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  double epoch_loss = 0.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int i = n - 1; i > 0; --i) {
      std::uniform_int_distribution<int> pick(0, i);
      std::swap(order[i], order[pick(rng)]);
    }
    double total = 0.0;
    for (int start = 0; start < n; start += bs) {
      const int count = std::min(bs, n - start);
      Mat xb(x.rows(), count);
      Vec tb(count);
      for (int k = 0; k < count; ++k) {
        xb.col(k) = x.col(order[start + k]);
        tb[k] = targets[order[start + k]];
      }
      total += fit_step(xb, tb, cfg, adam) * count;
    }
    epoch_loss = total / n;
    bool finite = std::isfinite(epoch_loss);
    for (const auto& net : nets_) finite = finite && net.params().allFinite();
    if (!finite) {
      for (int i = 0; i < members(); ++i) nets_[i].params() = backup[i];
      *adam = adam_backup;
      throw TrainingDivergence("value fit diverged (non-finite loss)", iteration);
    }
  }
  return epoch_loss;
}

}  // namespace cfvi
