#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "mdpu/numeric.hpp"
#include "mdpu/problem.hpp"

namespace mdpu {

/// Closed-form quantities of the dominant-positive tuple distribution.
///
/// Every position of a tuple has marginal  a * p_plus(x) + b * p_minus(x).
/// `d` is the denominator shared by both composite losses and `z` the
/// normalizer of the tuple density. `p_k[k]` is the probability that a tuple
/// holds exactly k negatives, k = 0 .. floor(M/2).
struct Coefficients {
  double a = 0.0;
  double b = 0.0;
  double d = 0.0;
  double z = 0.0;
  std::vector<double> p_k;
};

namespace detail {

inline double tuple_term(const ProblemSpec& spec, int k) {
  return std::pow(spec.pi_plus(), spec.m() - k) * std::pow(spec.pi_minus(), k);
}

inline double tuple_normalizer(const ProblemSpec& spec) {
  double z = 0.0;
  for (int k = 0; k <= spec.max_negatives(); ++k)
    z += static_cast<double>(binomial(spec.m(), k)) * tuple_term(spec, k);
  return z;
}

}  // namespace detail

/// The denominator a*pi_minus - b*pi_plus after the binomial sums telescope:
///
///   d = C(M-1, K) pi_plus^(M-K) pi_minus^(K+1) / Z,   K = floor(M/2).
///
/// Strictly positive and free of cancellation.
inline double closed_form_denominator(const ProblemSpec& spec) {
  const int m = spec.m();
  const int kmax = spec.max_negatives();
  const double z = detail::tuple_normalizer(spec);
  if (!(z > 0.0)) throw std::domain_error("tuple normalizer underflows for this prior");
  const double num = static_cast<double>(binomial(m - 1, kmax)) *
                     std::pow(spec.pi_plus(), m - kmax) * std::pow(spec.pi_minus(), kmax + 1);
  return num / z;
}

inline Coefficients compute_coefficients(const ProblemSpec& spec) {
  const int m = spec.m();
  const int kmax = spec.max_negatives();

  Coefficients c;
  c.z = detail::tuple_normalizer(spec);
  if (!(c.z > 0.0)) throw std::domain_error("tuple normalizer underflows for this prior");

  double a_num = 0.0;
  double b_num = 0.0;
  c.p_k.resize(static_cast<std::size_t>(kmax) + 1);
  for (int k = 0; k <= kmax; ++k) {
    const double term = detail::tuple_term(spec, k);
    a_num += static_cast<double>(binomial(m - 1, k)) * term;
    if (k >= 1) b_num += static_cast<double>(binomial(m - 1, k - 1)) * term;
    c.p_k[static_cast<std::size_t>(k)] = static_cast<double>(binomial(m, k)) * term / c.z;
  }
  c.a = a_num / c.z;
  c.b = b_num / c.z;

  // a*pi_minus - b*pi_plus cancels catastrophically as pi_plus -> 1; the
  // telescoped form is algebraically identical and keeps full precision.
  c.d = closed_form_denominator(spec);
  if (!(c.d > 0.0)) throw std::domain_error("loss denominator underflows for this prior");
  return c;
}

}  // namespace mdpu
