#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace coms {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A point in the (normalized) design space.
using DesignVector = Vector;

inline constexpr double kDefaultLeak = 0.3;

/// Raised when a caller breaks a documented precondition (shape, emptiness, finiteness).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct DenseLayer {
  Matrix weights;  // fan_out x fan_in
  Vector bias;     // fan_out

  [[nodiscard]] Eigen::Index fan_in() const { return weights.cols(); }
  [[nodiscard]] Eigen::Index fan_out() const { return weights.rows(); }
  [[nodiscard]] bool is_finite() const;
};

/// Parameter-shaped buffer; used for gradients and Adam moments alike.
using ParameterSet = std::vector<DenseLayer>;

[[nodiscard]] ParameterSet zeros_like(const ParameterSet& params);
void add_scaled(ParameterSet& dst, const ParameterSet& src, double scale);
[[nodiscard]] bool all_finite(const ParameterSet& params);
/// Concatenates every layer's weights (column-major) then bias.
[[nodiscard]] Vector flatten(const ParameterSet& params);
/// Inverse of flatten; `params` supplies the shapes.
void unflatten(const Vector& flat, ParameterSet& params);

[[nodiscard]] double leaky_relu(double z, double leak);

enum class LossKind {
  kHalfSquaredError,  // weight * 0.5 * (f(x) - target)^2
  kSignedLinear,      // weight * f(x); the target is ignored
};

/// Designs are stored one per column. `weights` scales each sample's term.
struct LossBatch {
  Matrix designs;
  Vector targets;
  Vector weights;

  [[nodiscard]] Eigen::Index size() const { return designs.cols(); }
};

/// Dense feed-forward scalar regressor: affine layers separated by leaky ReLU,
/// no activation after the last layer.
class ObjectiveModel {
 public:
  ObjectiveModel() = default;
  explicit ObjectiveModel(std::vector<DenseLayer> layers, double leak = kDefaultLeak);

  /// He-style uniform initialization, U(-sqrt(6/fan_in), sqrt(6/fan_in)) weights and zero bias.
  static ObjectiveModel make_mlp(int input_dim, std::span<const int> hidden_widths,
                                 std::uint64_t seed, double leak = kDefaultLeak);

  [[nodiscard]] Eigen::Index input_dim() const { return layers_.front().fan_in(); }
  [[nodiscard]] double leak() const { return leak_; }
  [[nodiscard]] const ParameterSet& layers() const { return layers_; }
  [[nodiscard]] ParameterSet& mutable_layers() { return layers_; }
  [[nodiscard]] std::size_t parameter_count() const;

  [[nodiscard]] double forward(const DesignVector& x) const;
  /// One prediction per column of `designs`.
  [[nodiscard]] Vector forward_batch(const Matrix& designs) const;

  [[nodiscard]] Vector input_gradient(const DesignVector& x) const;
  /// Column j holds the gradient at design j.
  [[nodiscard]] Matrix input_gradient_batch(const Matrix& designs) const;

  /// Gradient of mean_i loss_i with respect to every weight and bias.
  [[nodiscard]] ParameterSet param_gradients(const LossBatch& batch, LossKind kind) const;

  /// Backpropagates per-column output sensitivities dL/df; the result is the
  /// plain sum over columns, so callers fold any averaging into `output_grad`.
  [[nodiscard]] ParameterSet backprop(const Matrix& designs, const Vector& output_grad) const;

 private:
  void check_input(Eigen::Index rows) const;

  ParameterSet layers_;
  double leak_ = kDefaultLeak;
};

struct AdamState {
  std::int64_t step_count = 0;
  ParameterSet first_moment;
  ParameterSet second_moment;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

[[nodiscard]] AdamState make_adam(const ParameterSet& params, double learning_rate = 1e-3);

/// Bias-corrected Adam update in place. Throws ContractViolation and leaves
/// both `state` and `params` untouched when `grads` holds a NaN/Inf or has the wrong shape.
void adam_step(AdamState& state, ParameterSet& params, const ParameterSet& grads);

}  // namespace coms
