#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string_view>
#include <vector>

#include "ontotutor/error.hpp"
#include "ontotutor/rng.hpp"

namespace ontotutor {

enum class OutputActivation { Linear, Logistic };

inline std::string_view to_string(OutputActivation a) {
  return a == OutputActivation::Linear ? "linear" : "logistic";
}

inline double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Fully connected network: rectified hidden layers, linear or logistic
/// output. All weights and biases live in one flat parameter vector, laid out
/// layer by layer as W (rows = outputs, row-major) followed by b.
class Approximator {
 public:
  struct Tape {
    std::vector<std::vector<double>> activations;  // activations[0] = input
    std::vector<std::vector<double>> preactivations;
  };

  struct Gradient {
    std::vector<double> parameters;
    std::vector<double> input;
  };

  Approximator() = default;

  Approximator(std::vector<std::size_t> layer_sizes, OutputActivation output)
      : sizes_(std::move(layer_sizes)), output_(output) {
    if (sizes_.size() < 2) throw Error(ErrorCode::BadParameter, "approximator needs at least input and output layers");
    for (auto s : sizes_)
      if (s == 0) throw Error(ErrorCode::BadParameter, "approximator layer of size 0");
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      offsets_.push_back(offset);
      offset += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
    }
    params_.assign(offset, 0.0);
  }

  static Approximator actor(std::size_t state_dim, std::size_t action_dim, const std::vector<std::size_t>& hidden) {
    std::vector<std::size_t> sizes{state_dim};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(action_dim);
    return Approximator(std::move(sizes), OutputActivation::Logistic);
  }

  static Approximator critic(std::size_t state_dim, std::size_t action_dim, const std::vector<std::size_t>& hidden) {
    std::vector<std::size_t> sizes{state_dim + action_dim};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(1);
    return Approximator(std::move(sizes), OutputActivation::Linear);
  }

  /// Hidden layers uniform in ±1/sqrt(fan_in); output layer uniform in
  /// ±final_scale so fresh actors start near the middle of the action box.
  void initialize(Rng& rng, double final_scale = 3e-3) {
    for (std::size_t l = 0; l < num_layers(); ++l) {
      const bool last = l + 1 == num_layers();
      const double bound = last ? final_scale : 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
      auto w = weights(l);
      auto b = biases(l);
      for (auto& v : w) v = rng.uniform(-bound, bound);
      for (auto& v : b) v = rng.uniform(-bound, bound);
    }
  }

  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  OutputActivation output_activation() const { return output_; }
  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t output_dim() const { return sizes_.back(); }
  std::size_t num_layers() const { return sizes_.size() - 1; }
  std::size_t parameter_count() const { return params_.size(); }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  std::span<double> weights(std::size_t l) { return {params_.data() + offsets_[l], sizes_[l + 1] * sizes_[l]}; }
  std::span<const double> weights(std::size_t l) const {
    return {params_.data() + offsets_[l], sizes_[l + 1] * sizes_[l]};
  }
  std::span<double> biases(std::size_t l) {
    return {params_.data() + offsets_[l] + sizes_[l + 1] * sizes_[l], sizes_[l + 1]};
  }
  std::span<const double> biases(std::size_t l) const {
    return {params_.data() + offsets_[l] + sizes_[l + 1] * sizes_[l], sizes_[l + 1]};
  }

  bool same_shape(const Approximator& other) const { return sizes_ == other.sizes_ && output_ == other.output_; }

  bool all_finite() const {
    return std::all_of(params_.begin(), params_.end(), [](double v) { return std::isfinite(v); });
  }

  std::vector<double> forward(std::span<const double> input) const {
    Tape tape;
    return forward(input, tape);
  }

  std::vector<double> forward(std::span<const double> input, Tape& tape) const {
    if (input.size() != input_dim())
      throw Error(ErrorCode::DimensionMismatch,
                  "approximator input " + std::to_string(input.size()) + " != " + std::to_string(input_dim()));
    tape.activations.assign(1, std::vector<double>(input.begin(), input.end()));
    tape.preactivations.clear();
    for (std::size_t l = 0; l < num_layers(); ++l) {
      const auto& in = tape.activations.back();
      const auto w = weights(l);
      const auto b = biases(l);
      const std::size_t rows = sizes_[l + 1], cols = sizes_[l];
      std::vector<double> z(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        double acc = b[r];
        const double* wr = w.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * in[c];
        z[r] = acc;
      }
      std::vector<double> a(rows);
      const bool last = l + 1 == num_layers();
      for (std::size_t r = 0; r < rows; ++r) {
        if (!last) a[r] = z[r] > 0.0 ? z[r] : 0.0;
        else a[r] = output_ == OutputActivation::Logistic ? logistic(z[r]) : z[r];
      }
      tape.preactivations.push_back(std::move(z));
      tape.activations.push_back(std::move(a));
    }
    return tape.activations.back();
  }

  /// Backpropagates `seed` (d objective / d output) through a recorded
  /// forward pass. Parameter gradients are added into `param_grad`; the
  /// gradient with respect to the input is returned.
  std::vector<double> backward(const Tape& tape, std::span<const double> seed, std::span<double> param_grad) const {
    if (seed.size() != output_dim()) throw Error(ErrorCode::DimensionMismatch, "output seed size");
    if (param_grad.size() != parameter_count()) throw Error(ErrorCode::DimensionMismatch, "gradient buffer size");
    std::vector<double> delta(seed.begin(), seed.end());
    if (output_ == OutputActivation::Logistic) {
      const auto& y = tape.activations.back();
      for (std::size_t i = 0; i < delta.size(); ++i) delta[i] *= y[i] * (1.0 - y[i]);
    }
    for (std::size_t l = num_layers(); l-- > 0;) {
      const std::size_t rows = sizes_[l + 1], cols = sizes_[l];
      const auto& in = tape.activations[l];
      const auto w = weights(l);
      double* gw = param_grad.data() + offsets_[l];
      double* gb = gw + rows * cols;
      for (std::size_t r = 0; r < rows; ++r) {
        const double d = delta[r];
        gb[r] += d;
        if (d == 0.0) continue;
        double* gwr = gw + r * cols;
        for (std::size_t c = 0; c < cols; ++c) gwr[c] += d * in[c];
      }
      std::vector<double> prev(cols, 0.0);
      for (std::size_t r = 0; r < rows; ++r) {
        const double d = delta[r];
        if (d == 0.0) continue;
        const double* wr = w.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) prev[c] += wr[c] * d;
      }
      if (l > 0) {
        const auto& z = tape.preactivations[l - 1];
        for (std::size_t c = 0; c < cols; ++c)
          if (z[c] <= 0.0) prev[c] = 0.0;
      }
      delta = std::move(prev);
    }
    return delta;
  }

  /// Gradient of dot(seed, forward(input)) with respect to every parameter
  /// and to the input.
  Gradient gradient_of(std::span<const double> input, std::span<const double> seed) const {
    Tape tape;
    forward(input, tape);
    Gradient g;
    g.parameters.assign(parameter_count(), 0.0);
    g.input = backward(tape, seed, g.parameters);
    return g;
  }

  /// target <- (1 - tau) * target + tau * source, elementwise.
  void soft_update_from(const Approximator& source, double tau) {
    if (!same_shape(source)) throw Error(ErrorCode::ShapeMismatch, "soft update between different shapes");
    for (std::size_t i = 0; i < params_.size(); ++i) params_[i] = (1.0 - tau) * params_[i] + tau * source.params_[i];
  }

  bool operator==(const Approximator&) const = default;

 private:
  std::vector<std::size_t> sizes_;
  OutputActivation output_ = OutputActivation::Linear;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

/// Adam moment estimates for one parameter vector.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t steps = 0;

  bool operator==(const AdamState&) const = default;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}

  /// Descent step on `params` given the gradient of the loss.
  void step(std::span<double> params, std::span<const double> grad, double lr, double beta1 = 0.9,
            double beta2 = 0.999, double eps = 1e-8) {
    ++steps;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(steps));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(steps));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
      params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }
};

}  // namespace ontotutor
