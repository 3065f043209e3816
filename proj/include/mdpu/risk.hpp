#pragma once

#include <charconv>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mdpu/coeffs.hpp"
#include "mdpu/losses.hpp"
#include "mdpu/numeric.hpp"

namespace mdpu {

/// Risk correction f(x) = x for x >= 0 and k|x| otherwise.
/// URE leaves the estimator untouched; ReLU is k = 0 and ABS is k = 1.
class Correction {
 public:
  enum class Kind { Ure, Relu, Abs, Slope };

  static Correction ure() { return Correction(Kind::Ure, 1.0); }
  static Correction relu() { return Correction(Kind::Relu, 0.0); }
  static Correction abs() { return Correction(Kind::Abs, 1.0); }
  static Correction slope(double k) {
    if (!(k >= 0.0) || !std::isfinite(k))
      throw std::invalid_argument("correction slope must be finite and >= 0");
    return Correction(Kind::Slope, k);
  }

  Kind kind() const { return kind_; }
  double k() const { return k_; }
  bool is_identity() const { return kind_ == Kind::Ure; }

  double apply(double x) const {
    if (is_identity() || x >= 0.0) return x;
    return k_ * std::abs(x);
  }

  /// f'(x), taking the x >= 0 branch at the kink.
  double derivative(double x) const {
    if (is_identity() || x >= 0.0) return 1.0;
    return -k_;
  }

  std::string name() const {
    switch (kind_) {
      case Kind::Ure: return "ure";
      case Kind::Relu: return "relu";
      case Kind::Abs: return "abs";
      case Kind::Slope: {
        char buf[64];
        auto [end, ec] = std::to_chars(buf, buf + sizeof buf, k_);
        return "slope:" + std::string(buf, end);
      }
    }
    return "?";
  }

  friend bool operator==(const Correction&, const Correction&) = default;

 private:
  Correction(Kind kind, double k) : kind_(kind), k_(k) {}
  Kind kind_;
  double k_;
};

inline Correction parse_correction(std::string_view s) {
  if (s == "ure") return Correction::ure();
  if (s == "relu") return Correction::relu();
  if (s == "abs") return Correction::abs();
  if (s.starts_with("slope:")) {
    const std::string_view num = s.substr(6);
    double k = 0.0;
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), k);
    if (ec != std::errc() || ptr != num.data() + num.size() || num.empty())
      throw std::invalid_argument("bad correction slope in '" + std::string(s) + "'");
    return Correction::slope(k);
  }
  throw std::invalid_argument("unknown correction '" + std::string(s) +
                              "' (expected ure, relu, abs or slope:<k>)");
}

/// Where f is applied: to the whole estimate, or separately to the tuple
/// term and the unlabeled term.
enum class CorrectionScope { Whole, PerComponent };

inline std::string_view to_string(CorrectionScope s) {
  return s == CorrectionScope::Whole ? "whole" : "per-component";
}

inline CorrectionScope parse_scope(std::string_view s) {
  if (s == "whole") return CorrectionScope::Whole;
  if (s == "per-component") return CorrectionScope::PerComponent;
  throw std::invalid_argument("unknown correction scope '" + std::string(s) +
                              "' (expected whole or per-component)");
}

struct RiskReport {
  double r_mdp = 0.0;           // mean tuple-position loss
  double r_u = 0.0;             // mean unlabeled loss
  double prior_product = 0.0;   // pi_plus * pi_minus
  double raw_total = 0.0;       // prior_product * r_mdp + r_u
  double corrected_total = 0.0;
};

/// f applied to a report according to `scope`.
inline double correct(const RiskReport& report, const Correction& f, CorrectionScope scope) {
  if (f.is_identity()) return report.raw_total;
  if (scope == CorrectionScope::Whole) return f.apply(report.raw_total);
  return report.prior_product * f.apply(report.r_mdp) + f.apply(report.r_u);
}

namespace detail {

inline void check_risk_inputs(std::span<const double> scores_mdp, std::span<const double> scores_u,
                              const ProblemSpec& spec) {
  if (scores_mdp.empty()) throw std::invalid_argument("empty tuple batch");
  if (scores_u.empty()) throw std::invalid_argument("empty unlabeled batch");
  if (scores_mdp.size() % static_cast<std::size_t>(spec.m()) != 0)
    throw std::invalid_argument("tuple score count is not a multiple of the tuple size");
}

}  // namespace detail

/// Empirical risk from model scores on tuple positions (n_MDP * M values,
/// tuple-major) and on unlabeled points. `corrected_total` is filled with
/// `correct(report, f, scope)`.
inline RiskReport empirical_risk(std::span<const double> scores_mdp,
                                 std::span<const double> scores_u, LossKind kind,
                                 const Coefficients& coeffs, const ProblemSpec& spec,
                                 const Correction& f = Correction::ure(),
                                 CorrectionScope scope = CorrectionScope::PerComponent) {
  detail::check_risk_inputs(scores_mdp, scores_u, spec);

  std::vector<double> buf(scores_mdp.size());
  for (std::size_t i = 0; i < scores_mdp.size(); ++i) buf[i] = mdp_loss(kind, scores_mdp[i], coeffs);
  RiskReport r;
  r.r_mdp = pairwise_mean(buf);

  buf.resize(scores_u.size());
  for (std::size_t i = 0; i < scores_u.size(); ++i) buf[i] = u_loss(kind, scores_u[i], coeffs, spec);
  r.r_u = pairwise_mean(buf);

  r.prior_product = spec.prior_product();
  r.raw_total = r.prior_product * r.r_mdp + r.r_u;
  r.corrected_total = correct(r, f, scope);
  return r;
}

struct RiskGradient {
  RiskReport report;
  std::vector<double> d_mdp;  // d(corrected_total) / d(tuple score)
  std::vector<double> d_u;    // d(corrected_total) / d(unlabeled score)
};

/// Corrected risk and its gradient with respect to every score.
inline RiskGradient corrected_risk_grad(std::span<const double> scores_mdp,
                                        std::span<const double> scores_u, LossKind kind,
                                        const Coefficients& coeffs, const ProblemSpec& spec,
                                        const Correction& f, CorrectionScope scope) {
  RiskGradient g;
  g.report = empirical_risk(scores_mdp, scores_u, kind, coeffs, spec, f, scope);

  double scale_mdp = 1.0;
  double scale_u = 1.0;
  if (scope == CorrectionScope::Whole) {
    scale_mdp = scale_u = f.derivative(g.report.raw_total);
  } else {
    scale_mdp = f.derivative(g.report.r_mdp);
    scale_u = f.derivative(g.report.r_u);
  }

  const double w_mdp = spec.prior_product() / static_cast<double>(scores_mdp.size());
  const double w_u = 1.0 / static_cast<double>(scores_u.size());

  g.d_mdp.resize(scores_mdp.size());
  for (std::size_t i = 0; i < scores_mdp.size(); ++i)
    g.d_mdp[i] = scale_mdp * w_mdp * mdp_loss_grad(kind, scores_mdp[i], coeffs);
  g.d_u.resize(scores_u.size());
  for (std::size_t i = 0; i < scores_u.size(); ++i)
    g.d_u[i] = scale_u * w_u * u_loss_grad(kind, scores_u[i], coeffs, spec);
  return g;
}

}  // namespace mdpu
