#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

#include "mdpu/coeffs.hpp"
#include "mdpu/problem.hpp"

namespace mdpu {

enum class LossKind { Logistic, Ramp, Squared, Hinge };

inline constexpr LossKind kAllLosses[] = {LossKind::Logistic, LossKind::Ramp, LossKind::Squared,
                                          LossKind::Hinge};

inline std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::Logistic: return "logistic";
    case LossKind::Ramp: return "ramp";
    case LossKind::Squared: return "squared";
    case LossKind::Hinge: return "hinge";
  }
  return "?";
}

inline LossKind parse_loss_kind(std::string_view s) {
  for (LossKind k : kAllLosses)
    if (s == to_string(k)) return k;
  throw std::invalid_argument("unknown loss '" + std::string(s) +
                              "' (expected logistic, ramp, squared or hinge)");
}

namespace detail {

inline void require_finite(double t) {
  if (!std::isfinite(t)) throw std::domain_error("model output is not finite");
}

// 1 / (1 + exp(-x)) without overflow on either side.
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace detail

/// Pointwise loss l(t, z) for score t and label z.
inline double base_loss(LossKind kind, double t, Label z) {
  detail::require_finite(t);
  const double margin = t * sign(z);
  switch (kind) {
    case LossKind::Logistic:
      return std::log1p(std::exp(-std::abs(margin))) + std::max(0.0, -margin);
    case LossKind::Ramp:
      return std::min(1.0, std::max(0.0, 1.0 - margin));
    case LossKind::Squared:
      return 0.25 * (margin - 1.0) * (margin - 1.0);
    case LossKind::Hinge:
      return std::max(0.0, 1.0 - margin);
  }
  return 0.0;
}

/// dl/dt. At a kink the derivative of the branch with the smaller margin is
/// returned (Ramp at margins 0 and 1, Hinge at margin 1).
inline double base_loss_grad(LossKind kind, double t, Label z) {
  detail::require_finite(t);
  const double s = sign(z);
  const double margin = t * s;
  switch (kind) {
    case LossKind::Logistic:
      return -s * detail::sigmoid(-margin);
    case LossKind::Ramp:
      return (margin > 0.0 && margin <= 1.0) ? -s : 0.0;
    case LossKind::Squared:
      return 0.5 * s * (margin - 1.0);
    case LossKind::Hinge:
      return margin <= 1.0 ? -s : 0.0;
  }
  return 0.0;
}

namespace detail {
inline void require_positive_denominator(const Coefficients& c) {
  if (!(c.d > 0.0)) throw std::domain_error("loss denominator must be positive");
}
}  // namespace detail

/// Tuple-position loss (l(t,+1) - l(t,-1)) / d. Can be negative.
inline double mdp_loss(LossKind kind, double t, const Coefficients& c) {
  detail::require_positive_denominator(c);
  return (base_loss(kind, t, Label::Positive) - base_loss(kind, t, Label::Negative)) / c.d;
}

inline double mdp_loss_grad(LossKind kind, double t, const Coefficients& c) {
  detail::require_positive_denominator(c);
  return (base_loss_grad(kind, t, Label::Positive) - base_loss_grad(kind, t, Label::Negative)) /
         c.d;
}

/// Unlabeled-point loss (-b pi_plus l(t,+1) + a pi_minus l(t,-1)) / d.
inline double u_loss(LossKind kind, double t, const Coefficients& c, const ProblemSpec& spec) {
  detail::require_positive_denominator(c);
  return (-c.b * spec.pi_plus() * base_loss(kind, t, Label::Positive) +
          c.a * spec.pi_minus() * base_loss(kind, t, Label::Negative)) /
         c.d;
}

inline double u_loss_grad(LossKind kind, double t, const Coefficients& c,
                          const ProblemSpec& spec) {
  detail::require_positive_denominator(c);
  return (-c.b * spec.pi_plus() * base_loss_grad(kind, t, Label::Positive) +
          c.a * spec.pi_minus() * base_loss_grad(kind, t, Label::Negative)) /
         c.d;
}

}  // namespace mdpu
