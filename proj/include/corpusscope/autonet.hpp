#pragma once

// Minimal differentiable layers for the temporal CNN: valid 1D convolution,
// ReLU, inverted dropout, global max pooling, dense layers, softmax
// cross-entropy, SGD/Adam, and a central-difference gradient checker.
//
// Every layer is a pair of free functions (forward, backward). Backward
// functions accumulate into the gradient tensors of their LayerParams and
// return the gradient with respect to their input.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Core>

#include "corpusscope/errors.hpp"
#include "corpusscope/rng.hpp"

namespace corpusscope::autonet {

using Eigen::Index;

template <class Scalar>
using Tensor2 = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <class Scalar>
struct Param {
  Tensor2<Scalar> value;
  Tensor2<Scalar> grad;

  Param() = default;
  explicit Param(Tensor2<Scalar> v)
      : value(std::move(v)), grad(Tensor2<Scalar>::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(); }
};

template <class Scalar>
struct LayerParams {
  Param<Scalar> weight;
  Param<Scalar> bias;

  void zero_grad() {
    weight.zero_grad();
    bias.zero_grad();
  }
};

enum class Mode { Train, Eval };

// ---------------------------------------------------------------------------
// Initialization

/// Glorot-uniform weights, zero bias.
template <class Scalar>
Tensor2<Scalar> glorot_uniform(Index rows, Index cols, Index fan_in, Index fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor2<Scalar> w(rows, cols);
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<Scalar>(uniform(rng, -limit, limit));
  return w;
}

// ---------------------------------------------------------------------------
// Temporal convolution

struct Conv1dShape {
  Index kernel_size = 3;
  Index stride = 1;
  Index filters = 150;
};

/// Weight is filters x (kernel_size * dim), laid out so that
/// weight(f, k * dim + d) multiplies input(t * stride + k, d). Bias is 1 x filters.
template <class Scalar>
LayerParams<Scalar> make_conv1d(Index dim, const Conv1dShape& shape, Rng& rng) {
  const Index fan_in = shape.kernel_size * dim;
  const Index fan_out = shape.kernel_size * shape.filters;
  return {Param<Scalar>(glorot_uniform<Scalar>(shape.filters, fan_in, fan_in, fan_out, rng)),
          Param<Scalar>(Tensor2<Scalar>::Zero(1, shape.filters))};
}

inline Index conv1d_output_length(Index time, const Conv1dShape& shape) {
  if (shape.kernel_size < 1 || shape.stride < 1) throw InputError("kernel_size and stride must be positive");
  if (time < shape.kernel_size)
    throw InputError("conv1d input has " + std::to_string(time) + " rows, kernel needs " +
                     std::to_string(shape.kernel_size));
  return (time - shape.kernel_size) / shape.stride + 1;
}

/// Unrolls each receptive field into one row: (time' x kernel_size*dim).
template <class Derived>
Tensor2<typename Derived::Scalar> im2col(const Eigen::MatrixBase<Derived>& input,
                                         const Conv1dShape& shape) {
  using Scalar = typename Derived::Scalar;
  const Index out_len = conv1d_output_length(input.rows(), shape);
  const Index dim = input.cols();
  Tensor2<Scalar> patches(out_len, shape.kernel_size * dim);
  for (Index t = 0; t < out_len; ++t)
    for (Index k = 0; k < shape.kernel_size; ++k)
      patches.row(t).segment(k * dim, dim) = input.row(t * shape.stride + k);
  return patches;
}

template <class Scalar>
Tensor2<Scalar> conv1d_forward(const Tensor2<Scalar>& input, const Conv1dShape& shape,
                               const LayerParams<Scalar>& params) {
  if (params.weight.value.rows() != shape.filters ||
      params.weight.value.cols() != shape.kernel_size * input.cols())
    throw InputError("conv1d weight shape does not match input width");
  const Tensor2<Scalar> patches = im2col(input, shape);
  Tensor2<Scalar> out = patches * params.weight.value.transpose();
  out.rowwise() += params.bias.value.row(0);
  return out;
}

/// Returns d loss / d input (time x dim).
template <class Scalar>
Tensor2<Scalar> conv1d_backward(const Tensor2<Scalar>& input, const Conv1dShape& shape,
                                LayerParams<Scalar>& params, const Tensor2<Scalar>& grad_out) {
  const Tensor2<Scalar> patches = im2col(input, shape);
  params.weight.grad.noalias() += grad_out.transpose() * patches;
  params.bias.grad.row(0) += grad_out.colwise().sum();
  const Tensor2<Scalar> grad_patches = grad_out * params.weight.value;
  const Index dim = input.cols();
  Tensor2<Scalar> grad_in = Tensor2<Scalar>::Zero(input.rows(), dim);
  for (Index t = 0; t < grad_patches.rows(); ++t)
    for (Index k = 0; k < shape.kernel_size; ++k)
      grad_in.row(t * shape.stride + k) += grad_patches.row(t).segment(k * dim, dim);
  return grad_in;
}

// ---------------------------------------------------------------------------
// Activation

template <class Derived>
auto relu(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return Eigen::Matrix<Scalar, Derived::RowsAtCompileTime, Derived::ColsAtCompileTime,
                       Derived::IsRowMajor ? Eigen::RowMajor : Eigen::ColMajor>(
      x.cwiseMax(Scalar(0)));
}

/// Gradient passes where the pre-activation was strictly positive.
template <class DerivedX, class DerivedG>
auto relu_backward(const Eigen::MatrixBase<DerivedX>& pre, const Eigen::MatrixBase<DerivedG>& grad) {
  using Scalar = typename DerivedX::Scalar;
  return Eigen::Matrix<Scalar, DerivedX::RowsAtCompileTime, DerivedX::ColsAtCompileTime,
                       DerivedX::IsRowMajor ? Eigen::RowMajor : Eigen::ColMajor>(
      (pre.array() > Scalar(0)).select(grad, Scalar(0)));
}

// ---------------------------------------------------------------------------
// Global max pooling over time

template <class Scalar>
struct MaxPoolResult {
  Vector<Scalar> values;
  std::vector<Index> argmax;  // per filter, earliest row on ties
  std::vector<bool> tied;     // another row attained the same maximum
  Index time = 0;
};

template <class Scalar>
MaxPoolResult<Scalar> global_max_pool(const Tensor2<Scalar>& t) {
  if (t.rows() < 1) throw InputError("global_max_pool needs at least one time step");
  MaxPoolResult<Scalar> r;
  r.time = t.rows();
  r.values.resize(t.cols());
  r.argmax.assign(static_cast<std::size_t>(t.cols()), 0);
  r.tied.assign(static_cast<std::size_t>(t.cols()), false);
  for (Index f = 0; f < t.cols(); ++f) {
    Index best = 0;
    bool tie = false;
    for (Index i = 1; i < t.rows(); ++i) {
      if (t(i, f) > t(best, f)) {
        best = i;
        tie = false;
      } else if (t(i, f) == t(best, f)) {
        tie = true;
      }
    }
    r.values[f] = t(best, f);
    r.argmax[static_cast<std::size_t>(f)] = best;
    r.tied[static_cast<std::size_t>(f)] = tie;
  }
  return r;
}

/// Routes each filter's gradient to its retained argmax row.
template <class Scalar>
Tensor2<Scalar> global_max_pool_backward(const MaxPoolResult<Scalar>& pool, const Vector<Scalar>& grad) {
  Tensor2<Scalar> g = Tensor2<Scalar>::Zero(pool.time, pool.values.size());
  for (Index f = 0; f < grad.size(); ++f) g(pool.argmax[static_cast<std::size_t>(f)], f) = grad[f];
  return g;
}

// ---------------------------------------------------------------------------
// Dense

/// Weight is out x in, bias is out x 1.
template <class Scalar>
LayerParams<Scalar> make_dense(Index in, Index out, Rng& rng) {
  return {Param<Scalar>(glorot_uniform<Scalar>(out, in, in, out, rng)),
          Param<Scalar>(Tensor2<Scalar>::Zero(out, 1))};
}

template <class Scalar>
Vector<Scalar> dense_forward(const Vector<Scalar>& x, const LayerParams<Scalar>& params) {
  if (params.weight.value.cols() != x.size())
    throw InputError("dense layer expects input of size " + std::to_string(params.weight.value.cols()) +
                     ", got " + std::to_string(x.size()));
  return params.weight.value * x + params.bias.value.col(0);
}

template <class Scalar>
Vector<Scalar> dense_backward(const Vector<Scalar>& x, LayerParams<Scalar>& params,
                              const Vector<Scalar>& grad_out) {
  params.weight.grad.noalias() += grad_out * x.transpose();
  params.bias.grad.col(0) += grad_out;
  return params.weight.value.transpose() * grad_out;
}

// ---------------------------------------------------------------------------
// Dropout

template <class Scalar>
struct DropoutResult {
  Tensor2<Scalar> output;
  /// Per-element multiplier (0 or 1/(1-rate)); empty when dropout was a no-op.
  Tensor2<Scalar> scale;
};

template <class Scalar>
DropoutResult<Scalar> dropout(const Tensor2<Scalar>& t, double rate, Mode mode, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw InputError("dropout rate must lie in [0, 1)");
  if (mode == Mode::Eval || rate == 0.0) return {t, {}};
  const auto keep = static_cast<Scalar>(1.0 / (1.0 - rate));
  Tensor2<Scalar> scale(t.rows(), t.cols());
  for (Index i = 0; i < scale.size(); ++i) scale.data()[i] = bernoulli(rng, rate) ? Scalar(0) : keep;
  return {t.cwiseProduct(scale), std::move(scale)};
}

template <class Scalar>
Tensor2<Scalar> dropout_backward(const DropoutResult<Scalar>& d, const Tensor2<Scalar>& grad) {
  if (d.scale.size() == 0) return grad;
  return grad.cwiseProduct(d.scale);
}

// ---------------------------------------------------------------------------
// Softmax and loss

/// Max-shifted softmax.
template <class Scalar>
Vector<Scalar> softmax(const Vector<Scalar>& logits) {
  const Scalar shift = logits.maxCoeff();
  Vector<Scalar> e = (logits.array() - shift).exp().matrix();
  return e / e.sum();
}

/// Index of the largest entry; ties resolve to the lowest index.
template <class Derived>
Index argmax(const Eigen::MatrixBase<Derived>& v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

template <class Scalar>
struct CrossEntropy {
  Scalar loss;
  Vector<Scalar> probs;
  Vector<Scalar> grad_logits;
};

template <class Scalar>
CrossEntropy<Scalar> softmax_cross_entropy(const Vector<Scalar>& logits, Index target) {
  if (target < 0 || target >= logits.size())
    throw InputError("target index " + std::to_string(target) + " out of range for " +
                     std::to_string(logits.size()) + " classes");
  const Scalar shift = logits.maxCoeff();
  const Vector<Scalar> shifted = (logits.array() - shift).matrix();
  const Scalar log_z = std::log(shifted.array().exp().sum());
  CrossEntropy<Scalar> ce;
  ce.probs = (shifted.array() - log_z).exp().matrix();
  ce.loss = log_z - shifted[target];
  ce.grad_logits = ce.probs;
  ce.grad_logits[target] -= Scalar(1);
  return ce;
}

// ---------------------------------------------------------------------------
// Optimizers

struct OptimizerConfig {
  enum class Algorithm { Sgd, Adam };
  Algorithm algorithm = Algorithm::Adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Holds per-parameter moments; parameters must be passed in the same order
/// on every step.
template <class Scalar>
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config = {}) : config_(config) {}

  const OptimizerConfig& config() const { return config_; }
  long step_count() const { return step_count_; }

  void step(std::span<Param<Scalar>* const> params) {
    ++step_count_;
    const auto lr = static_cast<Scalar>(config_.learning_rate);
    if (config_.algorithm == OptimizerConfig::Algorithm::Sgd) {
      for (auto* p : params) p->value -= lr * p->grad;
      return;
    }
    if (first_moment_.empty()) {
      for (auto* p : params) {
        first_moment_.push_back(Tensor2<Scalar>::Zero(p->value.rows(), p->value.cols()));
        second_moment_.push_back(Tensor2<Scalar>::Zero(p->value.rows(), p->value.cols()));
      }
    }
    if (first_moment_.size() != params.size())
      throw std::logic_error("optimizer parameter list changed between steps");
    const auto b1 = static_cast<Scalar>(config_.beta1);
    const auto b2 = static_cast<Scalar>(config_.beta2);
    const auto eps = static_cast<Scalar>(config_.epsilon);
    const auto t = static_cast<Scalar>(step_count_);
    const Scalar correction1 = Scalar(1) - std::pow(b1, t);
    const Scalar correction2 = Scalar(1) - std::pow(b2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = *params[i];
      auto& m = first_moment_[i];
      auto& v = second_moment_[i];
      m = b1 * m + (Scalar(1) - b1) * p.grad;
      v = b2 * v + (Scalar(1) - b2) * p.grad.cwiseAbs2();
      p.value.array() -= lr * (m.array() / correction1) / ((v.array() / correction2).sqrt() + eps);
    }
  }

  const std::vector<Tensor2<Scalar>>& first_moments() const { return first_moment_; }
  const std::vector<Tensor2<Scalar>>& second_moments() const { return second_moment_; }

 private:
  OptimizerConfig config_;
  long step_count_ = 0;
  std::vector<Tensor2<Scalar>> first_moment_;
  std::vector<Tensor2<Scalar>> second_moment_;
};

// ---------------------------------------------------------------------------
// Finite-difference gradient verification

struct GradientCheckReport {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
};

/// Compares the analytic gradients already stored in `params` with central
/// differences of `loss`. The difference is taken in the loss's own return
/// type, which may be wider than Scalar. `skip(param_index, row, col)`
/// excludes entries at nondifferentiable points. Parameters are restored
/// exactly afterwards.
template <class Scalar, class LossFn>
GradientCheckReport gradient_check(std::span<Param<Scalar>* const> params, LossFn&& loss, Scalar eps,
                                   const std::function<bool(std::size_t, Index, Index)>& skip = {}) {
  using Loss = std::invoke_result_t<LossFn&>;
  static_assert(sizeof(Scalar) >= 8 && sizeof(Loss) >= 8, "gradient checks require at least 64-bit precision");
  GradientCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = *params[pi];
    for (Index r = 0; r < p.value.rows(); ++r) {
      for (Index c = 0; c < p.value.cols(); ++c) {
        if (skip && skip(pi, r, c)) {
          ++report.skipped;
          continue;
        }
        const Scalar original = p.value(r, c);
        const Scalar hi = original + eps;
        const Scalar lo = original - eps;
        p.value(r, c) = hi;
        const Loss plus = loss();
        p.value(r, c) = lo;
        const Loss minus = loss();
        p.value(r, c) = original;
        // Divide by the step actually applied after rounding.
        const double numeric = static_cast<double>((plus - minus) / (static_cast<Loss>(hi) - static_cast<Loss>(lo)));
        const double analytic = static_cast<double>(p.grad(r, c));
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
        report.max_relative_error = std::max(report.max_relative_error, std::abs(analytic - numeric) / denom);
        ++report.checked;
      }
    }
  }
  return report;
}

}  // namespace corpusscope::autonet
