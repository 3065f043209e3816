#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"

#include "mdpu/oracle.hpp"

namespace mdpu {

struct CheckResult {
  std::string name;
  bool passed = false;
  double max_deviation = 0.0;
  double tolerance = 0.0;
  std::string error;  // set when the check threw
};

using CoefficientFn = std::function<Coefficients(const ProblemSpec&)>;

struct VerifyOptions {
  CoefficientFn coefficients = compute_coefficients;  // replaceable for negative controls
  std::uint64_t seed = 20240601;
  std::size_t probe_trials = 200;
};

namespace detail {

inline std::vector<double> verify_prior_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 19; ++i) g.push_back(0.05 * i);
  return g;
}

inline CheckResult run_check(const std::string& name, double tolerance, const std::function<double()>& body) {
  CheckResult r{name, false, 0.0, tolerance, {}};
  try {
    r.max_deviation = body();
    r.passed = std::isfinite(r.max_deviation) && r.max_deviation <= tolerance;
  } catch (const std::exception& e) {
    r.error = e.what();
    r.max_deviation = std::numeric_limits<double>::infinity();
  }
  return r;
}

}  // namespace detail

/// Runs every oracle check. Each result's deviation is the largest absolute
/// discrepancy seen; a check passes when it does not exceed the tolerance.
inline std::vector<CheckResult> run_verification(const VerifyOptions& opt = {}) {
  using detail::run_check;
  const auto grid = detail::verify_prior_grid();
  std::vector<CheckResult> out;

  out.push_back(run_check("coefficients_match_enumeration", 1e-12, [&] {
    double dev = 0.0;
    for (int m = 1; m <= 12; ++m)
      for (double pi : grid) {
        const ProblemSpec spec(pi, m);
        const auto c = opt.coefficients(spec);
        const auto o = oracle::brute_force_coefficients(spec);
        dev = std::max({dev, std::abs(c.a - o.a), std::abs(c.b - o.b), std::abs(c.z - o.z)});
        for (double pa : o.position_a) dev = std::max(dev, std::abs(pa - c.a));
      }
    return dev;
  }));

  out.push_back(run_check("coefficient_identities", 1e-12, [&] {
    double dev = 0.0;
    for (int m = 1; m <= 12; ++m)
      for (double pi : grid) {
        const ProblemSpec spec(pi, m);
        const auto c = opt.coefficients(spec);
        if (!(c.d > 0.0)) return std::numeric_limits<double>::infinity();
        dev = std::max({dev, std::abs(c.a + c.b - 1.0),
                        std::abs(c.d - (c.a * spec.pi_minus() - c.b * spec.pi_plus())),
                        std::abs(closed_form_denominator(spec) - c.d)});
      }
    return dev;
  }));

  out.push_back(run_check("pair_and_triple_closed_forms", 1e-12, [&] {
    double dev = 0.0;
    for (double pp : grid) {
      const double pm = 1.0 - pp;
      const auto c2 = opt.coefficients(ProblemSpec(pp, 2));
      const double z2 = pp * pp + 2 * pp * pm;
      const auto c3 = opt.coefficients(ProblemSpec(pp, 3));
      const double z3 = pp * pp * pp + 3 * pp * pp * pm;
      dev = std::max({dev, std::abs(c2.a - (pp * pp + pp * pm) / z2), std::abs(c2.b - pp * pm / z2),
                      std::abs(c3.a - (pp * pp * pp + 2 * pp * pp * pm) / z3),
                      std::abs(c3.b - pp * pp * pm / z3)});
    }
    return dev;
  }));

  out.push_back(run_check("dominant_config_count", 0.0, [&] {
    double dev = 0.0;
    for (int m = 1; m <= 20; ++m) {
      double expected = 0.0, c = 1.0;
      for (int k = 0; 2 * k <= m; ++k) {
        expected += c;
        c = c * (m - k) / (k + 1);
      }
      dev = std::max(dev, std::abs(static_cast<double>(oracle::enumerate_dominant_configs(m).size()) - expected));
    }
    return dev;
  }));

  out.push_back(run_check("worked_toy_expectation", 1e-10, [&] {
    const oracle::DiscreteToy toy{{0.4, -0.2}, {0.8, 0.2}, {0.3, 0.7}, 0.5};
    const auto e = oracle::exact_estimator_expectation(toy, toy.points, LossKind::Squared, 2);
    return std::max(std::abs(e.expected_raw - 0.2015), std::abs(e.supervised - 0.2015));
  }));

  out.push_back(run_check("estimator_unbiasedness", 1e-10, [&] {
    Rng rng(derive_seed(opt.seed, 1));
    double dev = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const auto toy = oracle::DiscreteToy::random(4, rng.uniform(0.1, 0.9), rng);
      std::vector<double> scores(toy.size());
      for (double& s : scores) s = rng.uniform(-2.5, 2.5);
      for (int m = 1; m <= 4; ++m)
        for (LossKind k : kAllLosses) {
          const auto e = oracle::exact_estimator_expectation(toy, scores, k, m);
          dev = std::max(dev, std::abs(e.expected_raw - e.supervised));
        }
    }
    return dev;
  }));

  out.push_back(run_check("tuple_marginal_mixture", 1e-12, [&] {
    Rng rng(derive_seed(opt.seed, 2));
    double dev = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      const auto toy = oracle::DiscreteToy::random(3, rng.uniform(0.1, 0.9), rng);
      for (int m = 1; m <= 5; ++m) {
        const auto c = opt.coefficients(ProblemSpec(toy.pi_plus, m));
        for (int pos = 0; pos < m; ++pos) {
          const auto marg = oracle::tuple_marginal(toy, m, pos);
          for (std::size_t i = 0; i < toy.size(); ++i)
            dev = std::max(dev, std::abs(marg[i] - (c.a * toy.p_plus[i] + c.b * toy.p_minus[i])));
        }
      }
    }
    return dev;
  }));

  out.push_back(run_check("class_conditional_inversion", 1e-12, [&] {
    Rng rng(derive_seed(opt.seed, 3));
    double dev = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const ProblemSpec spec(rng.uniform(0.1, 0.9), 1 + static_cast<int>(rng.below(6)));
      const auto c = opt.coefficients(spec);
      const auto toy = oracle::DiscreteToy::random(5, spec.pi_plus(), rng);
      // The forward mixture uses the enumerated marginal, not the coefficients under test.
      const auto bf = oracle::brute_force_coefficients(spec);
      std::vector<double> p_hat(toy.size()), p_u(toy.size());
      for (std::size_t i = 0; i < toy.size(); ++i) {
        p_hat[i] = bf.a * toy.p_plus[i] + bf.b * toy.p_minus[i];
        p_u[i] = spec.pi_plus() * toy.p_plus[i] + spec.pi_minus() * toy.p_minus[i];
      }
      const auto [pp, pm] = oracle::invert_class_conditionals(p_hat, p_u, c, spec);
      for (std::size_t i = 0; i < toy.size(); ++i)
        dev = std::max({dev, std::abs(pp[i] - toy.p_plus[i]), std::abs(pm[i] - toy.p_minus[i])});
    }
    return dev;
  }));

  out.push_back(run_check("convergence_rate_slope", 0.15, [&] {
    Rng rng(derive_seed(opt.seed, 4));
    const auto toy = oracle::DiscreteToy::random(4, 0.5, rng);
    const auto probe = oracle::convergence_probe(toy, LossKind::Logistic, ProblemSpec(0.5, 2), {100, 1000, 10000},
                                                 opt.probe_trials, derive_seed(opt.seed, 5));
    return std::abs(probe.slope + 0.5);
  }));

  return out;
}

inline bool all_passed(const std::vector<CheckResult>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

inline nlohmann::json verification_json(const std::vector<CheckResult>& checks) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["passed"] = all_passed(checks);
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) {
    nlohmann::json e{{"name", c.name},
                     {"passed", c.passed},
                     {"tolerance", c.tolerance}};
    if (std::isfinite(c.max_deviation))
      e["max_deviation"] = c.max_deviation;
    else
      e["max_deviation"] = nullptr;
    if (!c.error.empty()) e["error"] = c.error;
    j["checks"].push_back(std::move(e));
  }
  return j;
}

}  // namespace mdpu
