#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mdpu/oracle.hpp"
#include "test_util.hpp"

using namespace mdpu;
using oracle::DiscreteToy;

namespace {

DiscreteToy worked_toy() { return {{0.4, -0.2}, {0.8, 0.2}, {0.3, 0.7}, 0.5}; }

// Binomial sum computed with doubles, separate from the library's table.
double dominant_config_count(int m) {
  double total = 0.0, c = 1.0;
  for (int k = 0; 2 * k <= m; ++k) {
    total += c;
    c = c * (m - k) / (k + 1);
  }
  return total;
}

}  // namespace

TEST(Enumeration, SmallCases) {
  const auto two = oracle::enumerate_dominant_configs(2);
  ASSERT_EQ(two.size(), 3u);
  EXPECT_EQ(two[0], (oracle::LabelConfig{Label::Positive, Label::Positive}));
  EXPECT_EQ(two[1], (oracle::LabelConfig{Label::Negative, Label::Positive}));
  EXPECT_EQ(two[2], (oracle::LabelConfig{Label::Positive, Label::Negative}));
  EXPECT_EQ(oracle::enumerate_dominant_configs(3).size(), 4u);
  const auto one = oracle::enumerate_dominant_configs(1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0][0], Label::Positive);
  EXPECT_THROW(oracle::enumerate_dominant_configs(0), std::out_of_range);
  EXPECT_THROW(oracle::enumerate_dominant_configs(21), std::out_of_range);
}

TEST(Enumeration, CountMatchesBinomialSum) {
  for (int m = 1; m <= 20; ++m)
    EXPECT_EQ(static_cast<double>(oracle::enumerate_dominant_configs(m).size()), dominant_config_count(m)) << m;
}

TEST(BruteForce, Examples) {
  EXPECT_NEAR(oracle::brute_force_coefficients(ProblemSpec(0.5, 2)).a, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(oracle::brute_force_coefficients(ProblemSpec(0.5, 3)).a, 0.75, 1e-15);
  const ProblemSpec s(0.9, 5);
  const auto o = oracle::brute_force_coefficients(s);
  const auto c = compute_coefficients(s);
  EXPECT_NEAR(o.a, c.a, 1e-12);
  EXPECT_NEAR(o.b, c.b, 1e-12);
  EXPECT_NEAR(o.z, c.z, 1e-12);
}

TEST(Expectation, WorkedToy) {
  const auto toy = worked_toy();
  const auto e = oracle::exact_estimator_expectation(toy, toy.points, LossKind::Squared, 2);
  EXPECT_NEAR(e.supervised, 0.5 * (0.8 * 0.09 + 0.2 * 0.36) + 0.5 * (0.3 * 0.49 + 0.7 * 0.16), 1e-15);
  EXPECT_NEAR(e.expected_raw, 0.2015, 1e-10);
}

TEST(Expectation, ZeroScoresGiveLogTwo) {
  Rng rng(2);
  for (int i = 0; i < 5; ++i) {
    const auto toy = DiscreteToy::random(3, rng.uniform(0.2, 0.8), rng);
    const auto e = oracle::exact_estimator_expectation(toy, {0.0, 0.0, 0.0}, LossKind::Logistic, 3);
    EXPECT_NEAR(e.expected_raw, std::log(2.0), 1e-12);
    EXPECT_NEAR(e.supervised, std::log(2.0), 1e-12);
  }
}

TEST(Expectation, HingeTripleAtPriorPointSix) {
  Rng rng(3);
  const auto toy = DiscreteToy::random(3, 0.6, rng);
  const auto e = oracle::exact_estimator_expectation(toy, toy.points, LossKind::Hinge, 3);
  EXPECT_NEAR(e.expected_raw, e.supervised, 1e-10);
}

TEST(Expectation, UnbiasedForEveryLossAndSmallTupleSize) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto toy = DiscreteToy::random(4, rng.uniform(0.1, 0.9), rng);
    std::vector<double> scores(4);
    for (double& s : scores) s = rng.uniform(-2.5, 2.5);
    for (int m = 1; m <= 4; ++m)
      for (LossKind k : kAllLosses) {
        const auto e = oracle::exact_estimator_expectation(toy, scores, k, m);
        EXPECT_NEAR(e.expected_raw, e.supervised, 1e-10) << to_string(k) << " m=" << m;
      }
  }
}

TEST(Expectation, RejectsOversizedEnumeration) {
  Rng rng(5);
  const auto toy = DiscreteToy::random(40, 0.5, rng);
  EXPECT_THROW(oracle::exact_estimator_expectation(toy, toy.points, LossKind::Hinge, 4), std::out_of_range);
}

TEST(ReferenceLoss, AgreesWithLibrary) {
  Rng rng(6);
  for (int i = 0; i < 500; ++i) {
    const double t = rng.uniform(-5, 5);
    for (LossKind k : kAllLosses)
      for (Label z : {Label::Positive, Label::Negative})
        EXPECT_NEAR(oracle::reference_loss(k, t, z), base_loss(k, t, z), 1e-12);
  }
}

TEST(TupleMarginal, EveryPositionIsTheMixture) {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const auto toy = DiscreteToy::random(3, rng.uniform(0.1, 0.9), rng);
    for (int m = 1; m <= 5; ++m) {
      const auto c = compute_coefficients(ProblemSpec(toy.pi_plus, m));
      for (int pos = 0; pos < m; ++pos) {
        const auto marg = oracle::tuple_marginal(toy, m, pos);
        for (std::size_t i = 0; i < toy.size(); ++i)
          EXPECT_NEAR(marg[i], c.a * toy.p_plus[i] + c.b * toy.p_minus[i], 1e-12);
      }
    }
  }
}

TEST(Inversion, WorkedToy) {
  const ProblemSpec spec(0.5, 2);
  const auto c = compute_coefficients(spec);
  const auto toy = worked_toy();
  const auto p_hat = oracle::tuple_marginal(toy, 2, 0);
  EXPECT_NEAR(p_hat[0], 0.633333333333, 1e-9);
  const std::vector<double> p_u = {0.55, 0.45};
  const auto [pp, pm] = oracle::invert_class_conditionals(p_hat, p_u, c, spec);
  EXPECT_NEAR(pp[0], 0.8, 1e-12);
  EXPECT_NEAR(pm[0], 0.3, 1e-12);
  EXPECT_NEAR(pp[1], 0.2, 1e-12);
}

namespace {

// Forward mixture then inversion; returns the largest absolute error.
double inversion_round_trip_error(const ProblemSpec& spec, Rng& rng) {
  const auto c = compute_coefficients(spec);
  const auto toy = DiscreteToy::random(5, spec.pi_plus(), rng);
  std::vector<double> p_hat(5), p_u(5);
  for (std::size_t i = 0; i < 5; ++i) {
    p_hat[i] = c.a * toy.p_plus[i] + c.b * toy.p_minus[i];
    p_u[i] = spec.pi_plus() * toy.p_plus[i] + spec.pi_minus() * toy.p_minus[i];
  }
  const auto [pp, pm] = oracle::invert_class_conditionals(p_hat, p_u, c, spec);
  double worst = 0.0;
  for (std::size_t i = 0; i < 5; ++i)
    worst = std::max({worst, std::abs(pp[i] - toy.p_plus[i]), std::abs(pm[i] - toy.p_minus[i])});
  return worst;
}

}  // namespace

TEST(Inversion, RoundTripsForwardMixture) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const ProblemSpec spec(rng.uniform(0.1, 0.9), 1 + static_cast<int>(rng.below(6)));
    EXPECT_LE(inversion_round_trip_error(spec, rng), 1e-12) << "m=" << spec.m() << " pi=" << spec.pi_plus();
  }
}

TEST(Inversion, ErrorScalesWithConditioning) {
  // Near pi = 1 with larger M the denominator is tiny and rounding in the
  // forward mixture is amplified by roughly 1/d.
  Rng rng(18);
  for (int trial = 0; trial < 100; ++trial) {
    const ProblemSpec spec(rng.uniform(0.05, 0.95), 1 + static_cast<int>(rng.below(10)));
    const double d = compute_coefficients(spec).d;
    EXPECT_LE(inversion_round_trip_error(spec, rng), 1e-14 / d) << "m=" << spec.m() << " pi=" << spec.pi_plus();
  }
}

TEST(Inversion, IdenticalClasses) {
  const ProblemSpec spec(0.3, 4);
  const auto c = compute_coefficients(spec);
  const std::vector<double> p = {0.1, 0.6, 0.3};
  std::vector<double> p_hat(3);
  for (std::size_t i = 0; i < 3; ++i) p_hat[i] = c.a * p[i] + c.b * p[i];
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(p_hat[i], p[i], 1e-15);
  const auto [pp, pm] = oracle::invert_class_conditionals(p_hat, p, c, spec);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(pp[i], p[i], 1e-12);
    EXPECT_NEAR(pm[i], p[i], 1e-12);
  }
  Coefficients bad = c;
  bad.d = 0.0;
  EXPECT_THROW(oracle::invert_class_conditionals(p_hat, p, bad, spec), std::domain_error);
}

TEST(Probe, SlopeNearMinusHalf) {
  Rng rng(9);
  const auto toy = DiscreteToy::random(4, 0.5, rng);
  const auto probe =
      oracle::convergence_probe(toy, LossKind::Logistic, ProblemSpec(0.5, 2), {100, 1000, 10000}, 200, 55);
  EXPECT_GE(probe.slope, -0.65);
  EXPECT_LE(probe.slope, -0.35);
  ASSERT_EQ(probe.stddev.size(), 3u);
}

TEST(Probe, IdenticalPointsHaveNoSpread) {
  DiscreteToy toy{{0.7, 0.7, 0.7}, {0.2, 0.3, 0.5}, {0.6, 0.2, 0.2}, 0.4};
  const auto probe = oracle::convergence_probe(toy, LossKind::Squared, ProblemSpec(0.4, 3), {10, 100, 1000}, 20, 1);
  for (double s : probe.stddev) EXPECT_EQ(s, 0.0);
  EXPECT_TRUE(std::isnan(probe.slope));
}

TEST(Probe, SameSeedSameOutput) {
  Rng rng(10);
  const auto toy = DiscreteToy::random(3, 0.5, rng);
  const auto a = oracle::convergence_probe(toy, LossKind::Hinge, ProblemSpec(0.5, 2), {50, 500}, 30, 7);
  const auto b = oracle::convergence_probe(toy, LossKind::Hinge, ProblemSpec(0.5, 2), {50, 500}, 30, 7);
  EXPECT_EQ(a.stddev, b.stddev);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.slope, b.slope);
  EXPECT_THROW(oracle::convergence_probe(toy, LossKind::Hinge, ProblemSpec(0.5, 2), {500, 50}, 30, 7),
               std::invalid_argument);
}
