#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

#include "mdpu/matrix.hpp"

namespace mdpu {

struct OptimConfig {
  enum class Algorithm { Sgd, Adam };

  Algorithm algorithm = Algorithm::Adam;
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  double momentum = 0.0;  // SGD only
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
    if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight decay must be >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must lie in [0,1)");
  }
};

inline OptimConfig::Algorithm parse_optimizer(std::string_view s) {
  if (s == "sgd") return OptimConfig::Algorithm::Sgd;
  if (s == "adam") return OptimConfig::Algorithm::Adam;
  throw std::invalid_argument("unknown optimizer '" + std::string(s) + "' (expected sgd or adam)");
}

inline std::string_view to_string(OptimConfig::Algorithm a) {
  return a == OptimConfig::Algorithm::Sgd ? "sgd" : "adam";
}

/// SGD with momentum or Adam, both with decoupled weight decay:
/// theta <- theta * (1 - lr * wd) before the gradient step.
class Optimizer {
 public:
  Optimizer(OptimConfig config, Eigen::Index n_params)
      : config_(config), m_(Vector::Zero(n_params)), v_(Vector::Zero(n_params)) {
    config_.validate();
  }

  void step(Vector& params, const Vector& grad) {
    if (grad.size() != params.size() || params.size() != m_.size())
      throw std::invalid_argument("optimizer: parameter/gradient size mismatch");
    const double lr = config_.learning_rate;
    if (config_.weight_decay > 0.0) params *= (1.0 - lr * config_.weight_decay);

    if (config_.algorithm == OptimConfig::Algorithm::Sgd) {
      if (config_.momentum > 0.0) {
        m_ = config_.momentum * m_ + grad;
        params -= lr * m_;
      } else {
        params -= lr * grad;
      }
      return;
    }

    ++t_;
    m_ = config_.beta1 * m_ + (1.0 - config_.beta1) * grad;
    v_ = config_.beta2 * v_ + (1.0 - config_.beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    params.array() -= lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + config_.epsilon);
  }

 private:
  OptimConfig config_;
  Vector m_;
  Vector v_;
  long long t_ = 0;
};

}  // namespace mdpu
