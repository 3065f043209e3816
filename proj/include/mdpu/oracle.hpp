#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mdpu/coeffs.hpp"
#include "mdpu/losses.hpp"
#include "mdpu/random.hpp"
#include "mdpu/risk.hpp"

// Brute-force checks for the closed forms. Nothing in here reuses the
// binomial tables, the coefficient sums or the pointwise loss kernels of the
// library; where a library routine is called it is the thing being checked.
namespace mdpu::oracle {

inline constexpr int kMaxEnumeratedTupleSize = 20;
inline constexpr double kMaxEnumeratedTuples = 1e6;

using LabelConfig = std::vector<Label>;

inline void check_enumerable(int m) {
  if (m < 1 || m > kMaxEnumeratedTupleSize)
    throw std::out_of_range("tuple size for enumeration must lie in [1, 20]");
}

/// Every label vector of length m with at least as many positives as
/// negatives, in increasing order of the negative-position bitmask.
inline std::vector<LabelConfig> enumerate_dominant_configs(int m) {
  check_enumerable(m);
  std::vector<LabelConfig> out;
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    if (2 * std::popcount(mask) > m) continue;
    LabelConfig c(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) c[i] = (mask >> i) & 1u ? Label::Negative : Label::Positive;
    out.push_back(std::move(c));
  }
  return out;
}

inline double config_weight(const LabelConfig& c, double pi_plus) {
  double w = 1.0;
  for (Label y : c) w *= (y == Label::Positive) ? pi_plus : 1.0 - pi_plus;
  return w;
}

struct BruteForceCoefficients {
  double a = 0.0;
  double b = 0.0;
  double z = 0.0;
  std::vector<double> position_a;  // P(position j is positive), every j
  std::vector<double> p_k;         // P(k negatives)
};

/// Coefficients read directly off the normalized configuration weights.
inline BruteForceCoefficients brute_force_coefficients(const ProblemSpec& spec) {
  const int m = spec.m();
  check_enumerable(m);
  BruteForceCoefficients r;
  r.position_a.assign(static_cast<std::size_t>(m), 0.0);
  r.p_k.assign(static_cast<std::size_t>(m / 2) + 1, 0.0);
  double first_neg = 0.0;
  for (const auto& c : enumerate_dominant_configs(m)) {
    const double w = config_weight(c, spec.pi_plus());
    r.z += w;
    std::size_t k = 0;
    for (int j = 0; j < m; ++j) {
      if (c[j] == Label::Positive)
        r.position_a[j] += w;
      else
        ++k;
    }
    r.p_k[k] += w;
    if (c[0] == Label::Negative) first_neg += w;
  }
  for (double& v : r.position_a) v /= r.z;
  for (double& v : r.p_k) v /= r.z;
  r.a = r.position_a[0];
  r.b = first_neg / r.z;
  return r;
}

/// Class-conditional distributions on a finite set of points. The points are
/// also the scores the probe feeds to the estimator.
struct DiscreteToy {
  std::vector<double> points;
  std::vector<double> p_plus;
  std::vector<double> p_minus;
  double pi_plus = 0.5;

  std::size_t size() const { return points.size(); }

  void validate() const {
    if (points.empty() || p_plus.size() != points.size() || p_minus.size() != points.size())
      throw std::invalid_argument("toy: points and distributions must be non-empty and aligned");
    auto check = [](const std::vector<double>& p) {
      double s = 0.0;
      for (double v : p) {
        if (v < 0.0) throw std::invalid_argument("toy: negative probability");
        s += v;
      }
      if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("toy: distribution does not sum to 1");
    };
    check(p_plus);
    check(p_minus);
  }

  /// Random toy: Dirichlet(1,...,1) class conditionals, points in [-3, 3].
  static DiscreteToy random(std::size_t r, double pi_plus, Rng& rng) {
    DiscreteToy t;
    t.pi_plus = pi_plus;
    auto simplex = [&] {
      std::vector<double> p(r);
      double s = 0.0;
      for (double& v : p) s += (v = -std::log(1.0 - rng.uniform()));
      for (double& v : p) v /= s;
      return p;
    };
    t.p_plus = simplex();
    t.p_minus = simplex();
    for (std::size_t i = 0; i < r; ++i) t.points.push_back(rng.uniform(-3.0, 3.0));
    return t;
  }
};

/// Straightforward transcription of the four pointwise losses.
inline double reference_loss(LossKind kind, double t, Label z) {
  const double m = t * (z == Label::Positive ? 1.0 : -1.0);
  switch (kind) {
    case LossKind::Logistic: return std::log(1.0 + std::exp(-m));
    case LossKind::Ramp: return m >= 1.0 ? 0.0 : (m <= 0.0 ? 1.0 : 1.0 - m);
    case LossKind::Squared: return (m - 1.0) * (m - 1.0) / 4.0;
    case LossKind::Hinge: return m >= 1.0 ? 0.0 : 1.0 - m;
  }
  return 0.0;
}

/// Fully supervised risk pi_+ E_+[l(g,+1)] + pi_- E_-[l(g,-1)].
inline double supervised_risk(const DiscreteToy& toy, const std::vector<double>& scores, LossKind kind) {
  double r = 0.0;
  for (std::size_t i = 0; i < toy.size(); ++i)
    r += toy.pi_plus * toy.p_plus[i] * reference_loss(kind, scores[i], Label::Positive) +
         (1.0 - toy.pi_plus) * toy.p_minus[i] * reference_loss(kind, scores[i], Label::Negative);
  return r;
}

/// Enumerates all r^m point tuples and returns their probabilities under the
/// dominant-positive tuple density, in odometer order (position 0 fastest).
inline std::vector<double> tuple_probabilities(const DiscreteToy& toy, int m) {
  check_enumerable(m);
  const std::size_t r = toy.size();
  if (std::pow(static_cast<double>(r), m) > kMaxEnumeratedTuples)
    throw std::out_of_range("enumeration too large");
  const auto configs = enumerate_dominant_configs(m);
  double z = 0.0;
  for (const auto& c : configs) z += config_weight(c, toy.pi_plus);

  std::size_t total = 1;
  for (int i = 0; i < m; ++i) total *= r;
  std::vector<double> probs(total, 0.0);
  std::vector<std::size_t> idx(static_cast<std::size_t>(m), 0);
  for (std::size_t t = 0; t < total; ++t) {
    double p = 0.0;
    for (const auto& c : configs) {
      double w = config_weight(c, toy.pi_plus);
      for (int j = 0; j < m; ++j)
        w *= (c[j] == Label::Positive ? toy.p_plus : toy.p_minus)[idx[j]];
      p += w;
    }
    probs[t] = p / z;
    for (int j = 0; j < m; ++j) {
      if (++idx[j] < r) break;
      idx[j] = 0;
    }
  }
  return probs;
}

/// Marginal density of one tuple position, by summing the enumerated joint.
inline std::vector<double> tuple_marginal(const DiscreteToy& toy, int m, int position) {
  const auto probs = tuple_probabilities(toy, m);
  const std::size_t r = toy.size();
  std::size_t stride = 1;
  for (int j = 0; j < position; ++j) stride *= r;
  std::vector<double> out(r, 0.0);
  for (std::size_t t = 0; t < probs.size(); ++t) out[(t / stride) % r] += probs[t];
  return out;
}

struct ExpectationCheck {
  double expected_raw = 0.0;
  double supervised = 0.0;
};

/// Exact expectation of the library's empirical risk over the tuple and
/// unlabeled distributions of `toy`, next to the supervised risk.
inline ExpectationCheck exact_estimator_expectation(const DiscreteToy& toy,
                                                    const std::vector<double>& scores,
                                                    LossKind kind, int m) {
  toy.validate();
  if (scores.size() != toy.size()) throw std::invalid_argument("one score per toy point required");
  const ProblemSpec spec(toy.pi_plus, m);
  const Coefficients coeffs = compute_coefficients(spec);
  const auto probs = tuple_probabilities(toy, m);
  const std::size_t r = toy.size();

  // Expected tuple component: one single-tuple estimate per enumerated tuple.
  const std::vector<double> dummy_u = {scores[0]};
  std::vector<double> tuple_scores(static_cast<std::size_t>(m));
  std::vector<std::size_t> idx(static_cast<std::size_t>(m), 0);
  double e_mdp = 0.0;
  for (std::size_t t = 0; t < probs.size(); ++t) {
    for (int j = 0; j < m; ++j) tuple_scores[j] = scores[idx[j]];
    e_mdp += probs[t] * empirical_risk(tuple_scores, dummy_u, kind, coeffs, spec).r_mdp;
    for (int j = 0; j < m; ++j) {
      if (++idx[j] < r) break;
      idx[j] = 0;
    }
  }

  // Expected unlabeled component under pi_+ p_+ + pi_- p_-.
  std::vector<double> dummy_t(static_cast<std::size_t>(m), scores[0]);
  double e_u = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    const double pu = toy.pi_plus * toy.p_plus[i] + (1.0 - toy.pi_plus) * toy.p_minus[i];
    const std::vector<double> u = {scores[i]};
    e_u += pu * empirical_risk(dummy_t, u, kind, coeffs, spec).r_u;
  }

  return {spec.prior_product() * e_mdp + e_u, supervised_risk(toy, scores, kind)};
}

/// Recovers the class conditionals from a tuple marginal and the unlabeled
/// marginal:  p_+ = (pi_- p_hat - b p_U) / d,  p_- = (-pi_+ p_hat + a p_U) / d.
inline std::pair<std::vector<double>, std::vector<double>> invert_class_conditionals(
    const std::vector<double>& p_hat, const std::vector<double>& p_u, const Coefficients& coeffs,
    const ProblemSpec& spec) {
  if (!(coeffs.d > 0.0)) throw std::domain_error("loss denominator must be positive");
  if (p_hat.size() != p_u.size()) throw std::invalid_argument("marginals differ in length");
  std::vector<double> pp(p_hat.size()), pm(p_hat.size());
  for (std::size_t i = 0; i < p_hat.size(); ++i) {
    pp[i] = (spec.pi_minus() * p_hat[i] - coeffs.b * p_u[i]) / coeffs.d;
    pm[i] = (-spec.pi_plus() * p_hat[i] + coeffs.a * p_u[i]) / coeffs.d;
  }
  return {std::move(pp), std::move(pm)};
}

struct ConvergenceProbe {
  std::vector<std::size_t> n;
  std::vector<double> stddev;
  std::vector<double> mean;
  double slope = std::numeric_limits<double>::quiet_NaN();  // NaN if any stddev is 0
};

namespace detail {

inline std::size_t draw_categorical(const std::vector<double>& p, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    cum += p[i];
    if (u < cum) return i;
  }
  return p.size() - 1;
}

}  // namespace detail

/// Spread of the raw empirical risk across independent samples of size
/// n_MDP = n_U = n, and the least-squares slope of log(stddev) on log(n).
///
/// Samples are drawn here by choosing a label configuration with probability
/// proportional to its weight and then each point from its class conditional;
/// the library's tuple sampler is not involved. Trial t at grid index i uses
/// stream derive_seed(seed, i * trials + t).
inline ConvergenceProbe convergence_probe(const DiscreteToy& toy, LossKind kind,
                                          const ProblemSpec& spec, const std::vector<std::size_t>& n_grid,
                                          std::size_t trials, std::uint64_t seed) {
  toy.validate();
  if (trials < 2) throw std::invalid_argument("need at least two trials");
  for (std::size_t i = 1; i < n_grid.size(); ++i)
    if (n_grid[i] <= n_grid[i - 1]) throw std::invalid_argument("n grid must be increasing");
  const int m = spec.m();
  const Coefficients coeffs = compute_coefficients(spec);
  const auto configs = enumerate_dominant_configs(m);
  std::vector<double> config_p;
  double z = 0.0;
  for (const auto& c : configs) z += config_p.emplace_back(config_weight(c, spec.pi_plus()));
  for (double& w : config_p) w /= z;

  ConvergenceProbe out;
  std::vector<double> st, su, totals(trials);
  for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
    const std::size_t n = n_grid[gi];
    st.resize(n * static_cast<std::size_t>(m));
    su.resize(n);
    for (std::size_t t = 0; t < trials; ++t) {
      Rng rng(derive_seed(seed, gi * trials + t));
      for (std::size_t i = 0; i < n; ++i) {
        const auto& c = configs[detail::draw_categorical(config_p, rng)];
        for (int j = 0; j < m; ++j)
          st[i * m + j] = toy.points[detail::draw_categorical(
              c[j] == Label::Positive ? toy.p_plus : toy.p_minus, rng)];
      }
      for (std::size_t i = 0; i < n; ++i) {
        const bool pos = rng.bernoulli(spec.pi_plus());
        su[i] = toy.points[detail::draw_categorical(pos ? toy.p_plus : toy.p_minus, rng)];
      }
      totals[t] = empirical_risk(st, su, kind, coeffs, spec).raw_total;
    }
    // Shifted by the first trial so identical totals give exactly zero spread.
    double shift_mean = 0.0;
    for (double v : totals) shift_mean += v - totals[0];
    shift_mean /= static_cast<double>(trials);
    double var = 0.0;
    for (double v : totals) var += (v - totals[0] - shift_mean) * (v - totals[0] - shift_mean);
    var /= static_cast<double>(trials - 1);
    out.n.push_back(n);
    out.mean.push_back(totals[0] + shift_mean);
    out.stddev.push_back(std::sqrt(var));
  }

  const bool positive = std::all_of(out.stddev.begin(), out.stddev.end(), [](double s) { return s > 0.0; });
  if (positive && out.n.size() >= 2) {
    double mx = 0.0, my = 0.0;
    const auto k = static_cast<double>(out.n.size());
    for (std::size_t i = 0; i < out.n.size(); ++i) {
      mx += std::log(static_cast<double>(out.n[i]));
      my += std::log(out.stddev[i]);
    }
    mx /= k;
    my /= k;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < out.n.size(); ++i) {
      const double dx = std::log(static_cast<double>(out.n[i])) - mx;
      sxy += dx * (std::log(out.stddev[i]) - my);
      sxx += dx * dx;
    }
    out.slope = sxy / sxx;
  }
  return out;
}

}  // namespace mdpu::oracle
