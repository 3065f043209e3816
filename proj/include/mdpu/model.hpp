#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "mdpu/matrix.hpp"
#include "mdpu/random.hpp"

namespace mdpu {

/// Scorer architecture: linear, or one hidden ReLU layer of `hidden_units`.
struct ModelConfig {
  enum class Kind { Linear, Mlp };

  Kind kind = Kind::Linear;
  std::size_t input_dim = 0;
  std::size_t hidden_units = 0;

  static ModelConfig linear(std::size_t dim) {
    if (dim == 0) throw std::invalid_argument("input dimension must be >= 1");
    return {Kind::Linear, dim, 0};
  }
  static ModelConfig mlp(std::size_t dim, std::size_t hidden) {
    if (dim == 0) throw std::invalid_argument("input dimension must be >= 1");
    if (hidden == 0) throw std::invalid_argument("hidden units must be >= 1");
    return {Kind::Mlp, dim, hidden};
  }

  /// Layout, MLP:   W1 (hidden x dim, row-major) | b1 (hidden) | w2 (hidden) | b2
  ///         Linear: w (dim) | b
  std::size_t parameter_count() const {
    if (kind == Kind::Linear) return input_dim + 1;
    return hidden_units * input_dim + hidden_units + hidden_units + 1;
  }

  std::string name() const {
    return kind == Kind::Linear ? "linear" : "mlp:" + std::to_string(hidden_units);
  }
};

/// Parses "linear" or "mlp:<hidden>".
inline ModelConfig parse_model(std::string_view s, std::size_t input_dim) {
  if (s == "linear") return ModelConfig::linear(input_dim);
  if (s.starts_with("mlp:")) {
    const std::string num(s.substr(4));
    std::size_t pos = 0;
    unsigned long h = 0;
    try {
      h = std::stoul(num, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != num.size()) throw std::invalid_argument("bad hidden size in '" + std::string(s) + "'");
    return ModelConfig::mlp(input_dim, h);
  }
  throw std::invalid_argument("unknown model '" + std::string(s) + "' (expected linear or mlp:<h>)");
}

/// Flat parameter vector plus the architecture that gives it meaning.
class ModelParams {
 public:
  explicit ModelParams(ModelConfig config)
      : config_(config), values_(Vector::Zero(static_cast<Eigen::Index>(config.parameter_count()))) {}

  ModelParams(ModelConfig config, Vector values) : config_(config), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.size()) != config_.parameter_count())
      throw std::invalid_argument("parameter vector length does not match the layout");
  }

  const ModelConfig& config() const { return config_; }
  const Vector& values() const { return values_; }
  Vector& values() { return values_; }

  friend bool operator==(const ModelParams& x, const ModelParams& y) {
    return x.config_.kind == y.config_.kind && x.config_.input_dim == y.config_.input_dim &&
           x.config_.hidden_units == y.config_.hidden_units && x.values_ == y.values_;
  }

 private:
  ModelConfig config_;
  Vector values_;
};

namespace detail {

struct MlpView {
  using RowMap = Eigen::Map<const Matrix>;
  using VecMap = Eigen::Map<const Vector>;
  RowMap w1;
  VecMap b1;
  VecMap w2;
  double b2;

  explicit MlpView(const ModelParams& p)
      : w1(p.values().data(), static_cast<Eigen::Index>(p.config().hidden_units),
           static_cast<Eigen::Index>(p.config().input_dim)),
        b1(p.values().data() + p.config().hidden_units * p.config().input_dim,
           static_cast<Eigen::Index>(p.config().hidden_units)),
        w2(b1.data() + p.config().hidden_units, static_cast<Eigen::Index>(p.config().hidden_units)),
        b2(p.values()[p.values().size() - 1]) {}
};

inline void check_dim(const ModelParams& p, Eigen::Index cols) {
  if (static_cast<std::size_t>(cols) != p.config().input_dim)
    throw std::invalid_argument("feature dimension " + std::to_string(cols) +
                                " does not match model input dimension " +
                                std::to_string(p.config().input_dim));
}

}  // namespace detail

/// Glorot-uniform weights, U(-s, s) with s = sqrt(6 / (fan_in + fan_out)),
/// per layer; zero biases.
inline ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  ModelParams p(config);
  Rng rng(seed);
  auto& v = p.values();
  const auto dim = static_cast<double>(config.input_dim);
  if (config.kind == ModelConfig::Kind::Linear) {
    const double s = std::sqrt(6.0 / (dim + 1.0));
    for (std::size_t i = 0; i < config.input_dim; ++i) v[static_cast<Eigen::Index>(i)] = rng.uniform(-s, s);
    return p;
  }
  const std::size_t h = config.hidden_units;
  const double s1 = std::sqrt(6.0 / (dim + static_cast<double>(h)));
  const double s2 = std::sqrt(6.0 / (static_cast<double>(h) + 1.0));
  std::size_t i = 0;
  for (; i < h * config.input_dim; ++i) v[static_cast<Eigen::Index>(i)] = rng.uniform(-s1, s1);
  i += h;  // b1
  for (std::size_t j = 0; j < h; ++j, ++i) v[static_cast<Eigen::Index>(i)] = rng.uniform(-s2, s2);
  return p;
}

/// Scores for every row of `x`.
inline Vector forward_batch(const ModelParams& p, const Matrix& x) {
  detail::check_dim(p, x.cols());
  const auto& cfg = p.config();
  if (cfg.kind == ModelConfig::Kind::Linear) {
    const Eigen::Map<const Vector> w(p.values().data(), static_cast<Eigen::Index>(cfg.input_dim));
    return (x * w).array() + p.values()[p.values().size() - 1];
  }
  const detail::MlpView m(p);
  const Matrix hidden = ((x * m.w1.transpose()).rowwise() + m.b1.transpose()).cwiseMax(0.0);
  return (hidden * m.w2).array() + m.b2;
}

inline double forward(const ModelParams& p, std::span<const double> x) {
  const Eigen::Map<const Matrix> row(x.data(), 1, static_cast<Eigen::Index>(x.size()));
  return forward_batch(p, Matrix(row))[0];
}

/// Gradient w.r.t. the parameters of  sum_i upstream[i] * g(x_i).
inline Vector backward_batch(const ModelParams& p, const Matrix& x, const Vector& upstream) {
  detail::check_dim(p, x.cols());
  if (upstream.size() != x.rows()) throw std::invalid_argument("upstream gradient length mismatch");
  const auto& cfg = p.config();
  Vector grad(p.values().size());
  if (cfg.kind == ModelConfig::Kind::Linear) {
    grad.head(static_cast<Eigen::Index>(cfg.input_dim)) = x.transpose() * upstream;
    grad[grad.size() - 1] = upstream.sum();
    return grad;
  }
  const detail::MlpView m(p);
  const auto h = static_cast<Eigen::Index>(cfg.hidden_units);
  const auto d = static_cast<Eigen::Index>(cfg.input_dim);
  const Matrix pre = (x * m.w1.transpose()).rowwise() + m.b1.transpose();
  const Matrix hidden = pre.cwiseMax(0.0);
  // d(score)/d(hidden) = w2, gated by the ReLU (derivative 0 at pre = 0).
  const Matrix d_pre =
      ((upstream * m.w2.transpose()).array() * (pre.array() > 0.0).cast<double>()).matrix();

  Eigen::Map<Matrix> g_w1(grad.data(), h, d);
  g_w1 = d_pre.transpose() * x;
  grad.segment(h * d, h) = d_pre.colwise().sum().transpose();
  grad.segment(h * d + h, h) = hidden.transpose() * upstream;
  grad[grad.size() - 1] = upstream.sum();
  return grad;
}

/// Fraction of rows whose predicted sign (sign(0) := +1) matches the label.
inline double evaluate(const ModelParams& p, const Matrix& features, std::span<const Label> labels) {
  if (labels.empty()) throw std::invalid_argument("empty test set");
  if (static_cast<std::size_t>(features.rows()) != labels.size())
    throw std::invalid_argument("test features and labels differ in length");
  const Vector scores = forward_batch(p, features);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const Label pred = scores[static_cast<Eigen::Index>(i)] >= 0.0 ? Label::Positive : Label::Negative;
    correct += (pred == labels[i]);
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

inline double evaluate(const ModelParams& p, const LabeledSet& test) {
  return evaluate(p, test.features, test.labels);
}

}  // namespace mdpu
