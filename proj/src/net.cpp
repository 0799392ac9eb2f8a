#include "coms/net.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>

namespace coms {

namespace {

// max(z, leak * z) equals the leaky ReLU for leak in (0,1) and vectorizes.
void apply_leaky_relu(Matrix& z, double leak) { z = z.cwiseMax(leak * z); }

Matrix leaky_relu_slope(const Matrix& z, double leak) {
  return (z.array() >= 0.0).select(Matrix::Ones(z.rows(), z.cols()), leak);
}

bool same_shape(const ParameterSet& a, const ParameterSet& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].weights.rows() != b[k].weights.rows() || a[k].weights.cols() != b[k].weights.cols() ||
        a[k].bias.size() != b[k].bias.size()) {
      return false;
    }
  }
  return true;
}

}  // namespace

bool DenseLayer::is_finite() const { return weights.allFinite() && bias.allFinite(); }

ParameterSet zeros_like(const ParameterSet& params) {
  ParameterSet out;
  out.reserve(params.size());
  for (const DenseLayer& layer : params) {
    out.push_back({Matrix::Zero(layer.weights.rows(), layer.weights.cols()),
                   Vector::Zero(layer.bias.size())});
  }
  return out;
}

void add_scaled(ParameterSet& dst, const ParameterSet& src, double scale) {
  if (!same_shape(dst, src)) throw ContractViolation("add_scaled: parameter shapes differ");
  for (std::size_t k = 0; k < dst.size(); ++k) {
    dst[k].weights += scale * src[k].weights;
    dst[k].bias += scale * src[k].bias;
  }
}

bool all_finite(const ParameterSet& params) {
  for (const DenseLayer& layer : params) {
    if (!layer.is_finite()) return false;
  }
  return true;
}

Vector flatten(const ParameterSet& params) {
  Eigen::Index total = 0;
  for (const DenseLayer& layer : params) total += layer.weights.size() + layer.bias.size();
  Vector flat(total);
  Eigen::Index at = 0;
  for (const DenseLayer& layer : params) {
    flat.segment(at, layer.weights.size()) = layer.weights.reshaped();
    at += layer.weights.size();
    flat.segment(at, layer.bias.size()) = layer.bias;
    at += layer.bias.size();
  }
  return flat;
}

void unflatten(const Vector& flat, ParameterSet& params) {
  Eigen::Index at = 0;
  for (DenseLayer& layer : params) {
    const Eigen::Index w = layer.weights.size();
    const Eigen::Index b = layer.bias.size();
    if (at + w + b > flat.size()) throw ContractViolation("unflatten: vector too short");
    layer.weights.reshaped() = flat.segment(at, w);
    at += w;
    layer.bias = flat.segment(at, b);
    at += b;
  }
  if (at != flat.size()) throw ContractViolation("unflatten: vector too long");
}

double leaky_relu(double z, double leak) { return z >= 0.0 ? z : leak * z; }

ObjectiveModel::ObjectiveModel(std::vector<DenseLayer> layers, double leak)
    : layers_(std::move(layers)), leak_(leak) {
  if (layers_.empty()) throw ContractViolation("ObjectiveModel needs at least one layer");
  if (!(leak_ > 0.0 && leak_ < 1.0)) {
    throw ContractViolation(fmt::format("leak must lie in (0,1), got {}", leak_));
  }
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const DenseLayer& layer = layers_[k];
    if (layer.bias.size() != layer.fan_out()) {
      throw ContractViolation(fmt::format("layer {}: bias size {} != fan_out {}", k,
                                          layer.bias.size(), layer.fan_out()));
    }
    if (k > 0 && layer.fan_in() != layers_[k - 1].fan_out()) {
      throw ContractViolation(fmt::format("layer {}: fan_in {} != previous fan_out {}", k,
                                          layer.fan_in(), layers_[k - 1].fan_out()));
    }
  }
  if (layers_.back().fan_out() != 1) throw ContractViolation("final layer must have fan_out 1");
  if (layers_.front().fan_in() < 1) throw ContractViolation("input_dim must be positive");
}

ObjectiveModel ObjectiveModel::make_mlp(int input_dim, std::span<const int> hidden_widths,
                                        std::uint64_t seed, double leak) {
  if (input_dim < 1) throw ContractViolation("input_dim must be positive");
  std::mt19937_64 rng(seed);
  std::vector<DenseLayer> layers;
  int fan_in = input_dim;
  auto make_layer = [&](int fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer layer{Matrix(fan_out, fan_in), Vector::Zero(fan_out)};
    for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
      for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) layer.weights(r, c) = dist(rng);
    }
    layers.push_back(std::move(layer));
    fan_in = fan_out;
  };
  for (int width : hidden_widths) {
    if (width < 1) throw ContractViolation("hidden widths must be positive");
    make_layer(width);
  }
  make_layer(1);
  return ObjectiveModel(std::move(layers), leak);
}

std::size_t ObjectiveModel::parameter_count() const {
  std::size_t count = 0;
  for (const DenseLayer& layer : layers_) {
    count += static_cast<std::size_t>(layer.weights.size() + layer.bias.size());
  }
  return count;
}

void ObjectiveModel::check_input(Eigen::Index rows) const {
  if (layers_.empty()) throw ContractViolation("model has no layers");
  if (rows != input_dim()) {
    throw ContractViolation(
        fmt::format("design has dimension {}, model expects {}", rows, input_dim()));
  }
}

double ObjectiveModel::forward(const DesignVector& x) const {
  check_input(x.size());
  Vector a = x;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    Vector z = layers_[k].weights * a + layers_[k].bias;
    if (k + 1 < layers_.size()) {
      a = z.unaryExpr([this](double v) { return leaky_relu(v, leak_); });
    } else {
      a = std::move(z);
    }
  }
  return a(0);
}

Vector ObjectiveModel::forward_batch(const Matrix& designs) const {
  check_input(designs.rows());
  Matrix a = designs;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    Matrix z = layers_[k].weights * a;
    z.colwise() += layers_[k].bias;
    if (k + 1 < layers_.size()) apply_leaky_relu(z, leak_);
    a = std::move(z);
  }
  return a.row(0).transpose();
}

Vector ObjectiveModel::input_gradient(const DesignVector& x) const {
  check_input(x.size());
  std::vector<Vector> pre;
  pre.reserve(layers_.size());
  Vector a = x;
  for (std::size_t k = 0; k + 1 < layers_.size(); ++k) {
    pre.push_back(layers_[k].weights * a + layers_[k].bias);
    a = pre.back().unaryExpr([this](double v) { return leaky_relu(v, leak_); });
  }
  // d f / d a_{L-1} is the single row of the output layer.
  Vector delta = layers_.back().weights.row(0).transpose();
  for (std::size_t k = layers_.size() - 1; k-- > 0;) {
    delta = delta.cwiseProduct(pre[k].unaryExpr([this](double v) { return v >= 0.0 ? 1.0 : leak_; }));
    delta = layers_[k].weights.transpose() * delta;
  }
  return delta;
}

Matrix ObjectiveModel::input_gradient_batch(const Matrix& designs) const {
  check_input(designs.rows());
  const std::size_t hidden = layers_.size() - 1;
  std::vector<Matrix> slopes(hidden);
  Matrix a = designs;
  Matrix z;
  for (std::size_t k = 0; k < hidden; ++k) {
    z.noalias() = layers_[k].weights * a;
    z.colwise() += layers_[k].bias;
    slopes[k] = leaky_relu_slope(z, leak_);
    a = z.cwiseMax(leak_ * z);
  }
  Matrix delta = layers_.back().weights.transpose().replicate(1, designs.cols());
  for (std::size_t k = hidden; k-- > 0;) {
    delta.array() *= slopes[k].array();
    z.noalias() = layers_[k].weights.transpose() * delta;
    std::swap(delta, z);
  }
  return delta;
}

ParameterSet ObjectiveModel::backprop(const Matrix& designs, const Vector& output_grad) const {
  check_input(designs.rows());
  if (output_grad.size() != designs.cols()) {
    throw ContractViolation("backprop: one output sensitivity per design is required");
  }
  // activations[k] is the input to layer k.
  std::vector<Matrix> activations;
  std::vector<Matrix> pre;
  activations.reserve(layers_.size());
  pre.reserve(layers_.size());
  activations.push_back(designs);
  for (std::size_t k = 0; k + 1 < layers_.size(); ++k) {
    Matrix z = layers_[k].weights * activations.back();
    z.colwise() += layers_[k].bias;
    pre.push_back(z);
    apply_leaky_relu(z, leak_);
    activations.push_back(std::move(z));
  }

  ParameterSet grads = zeros_like(layers_);
  Matrix delta = output_grad.transpose();  // 1 x n
  for (std::size_t k = layers_.size(); k-- > 0;) {
    grads[k].weights.noalias() = delta * activations[k].transpose();
    grads[k].bias = delta.rowwise().sum();
    if (k == 0) break;
    Matrix upstream = layers_[k].weights.transpose() * delta;
    delta = upstream.cwiseProduct(leaky_relu_slope(pre[k - 1], leak_));
  }
  return grads;
}

ParameterSet ObjectiveModel::param_gradients(const LossBatch& batch, LossKind kind) const {
  const Eigen::Index n = batch.size();
  if (n == 0) throw ContractViolation("param_gradients: empty batch");
  if (batch.weights.size() != n || (kind == LossKind::kHalfSquaredError && batch.targets.size() != n)) {
    throw ContractViolation("param_gradients: targets/weights must match the batch size");
  }
  Vector output_grad;
  if (kind == LossKind::kHalfSquaredError) {
    output_grad = (forward_batch(batch.designs) - batch.targets).cwiseProduct(batch.weights);
  } else {
    output_grad = batch.weights;
  }
  output_grad /= static_cast<double>(n);
  return backprop(batch.designs, output_grad);
}

AdamState make_adam(const ParameterSet& params, double learning_rate) {
  AdamState state;
  state.first_moment = zeros_like(params);
  state.second_moment = zeros_like(params);
  state.learning_rate = learning_rate;
  return state;
}

void adam_step(AdamState& state, ParameterSet& params, const ParameterSet& grads) {
  if (!same_shape(params, grads) || !same_shape(params, state.first_moment) ||
      !same_shape(params, state.second_moment)) {
    throw ContractViolation("adam_step: gradient/moment shapes do not match parameters");
  }
  if (!all_finite(grads)) throw ContractViolation("adam_step: non-finite gradient");

  const std::int64_t t = state.step_count + 1;
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t));
  const double lr = state.learning_rate;
  const double eps = state.epsilon;

  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    param.array() -= lr * (m.array() / correction1) / ((v.array() / correction2).sqrt() + eps);
  };
  for (std::size_t k = 0; k < params.size(); ++k) {
    update(params[k].weights, state.first_moment[k].weights, state.second_moment[k].weights,
           grads[k].weights);
    update(params[k].bias, state.first_moment[k].bias, state.second_moment[k].bias, grads[k].bias);
  }
  state.step_count = t;
}

}  // namespace coms
