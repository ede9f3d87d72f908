#include <gtest/gtest.h>

#include <cmath>

#include "genias/data.hpp"
#include "genias/theory.hpp"
#include "test_support.hpp"

using namespace genias;
using namespace genias::theory;

namespace {

BatchDecoder identity_decoder() {
  return [](const std::vector<std::vector<double>>& zs) { return zs; };
}

BatchDecoder linear_decoder(const std::vector<double>& a, std::size_t rows, std::size_t cols) {
  return [=](const std::vector<std::vector<double>>& zs) {
    std::vector<std::vector<double>> out;
    for (const auto& z : zs) {
      std::vector<double> y(rows, 0.0);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) y[r] += a[r * cols + c] * z[c];
      out.push_back(std::move(y));
    }
    return out;
  };
}

}  // namespace

TEST(KlGaussian, ClosedForm) {
  EXPECT_EQ(kl_gaussian(0.0, 0.3, 0.3), 0.0);
  EXPECT_NEAR(kl_gaussian(0.0, 0.5, 0.25), 0.5 * (1.0 - std::log(2.0)), 1e-15);
  EXPECT_NEAR(kl_gaussian(0.0, 0.5, 0.25), 0.1534, 1e-4);
  EXPECT_THROW(kl_gaussian(0.0, 0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(kl_gaussian(0.0, 1.0, -1.0), std::invalid_argument);
}

TEST(KlGaussian, NonNegativeWithEqualityOnlyAtPrior) {
  for (double mu : {-1.0, 0.0, 0.3})
    for (double s2 : {0.1, 0.25, 1.0, 2.0})
      for (double p2 : {0.25, 1.0}) {
        const double k = kl_gaussian(mu, s2, p2);
        EXPECT_GE(k, 0.0);
        if (mu == 0.0 && s2 == p2)
          EXPECT_EQ(k, 0.0);
        else
          EXPECT_GT(k, 0.0);
      }
}

TEST(KlGaussian, MatchesMonteCarlo) {
  Rng rng(21);
  std::uniform_real_distribution<double> mu_d(-1.0, 1.0), s_d(0.3, 1.5), p_d(0.3, 1.0);
  for (int trial = 0; trial < 3; ++trial) {
    const double mu = mu_d(rng), s2 = s_d(rng), p2 = p_d(rng);
    const double exact = kl_gaussian(mu, s2, p2);
    if (exact < 0.05) continue;
    std::normal_distribution<double> q(mu, std::sqrt(s2));
    double acc = 0.0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
      const double z = q(rng);
      const double log_q = -0.5 * std::log(2 * M_PI * s2) - (z - mu) * (z - mu) / (2 * s2);
      const double log_p = -0.5 * std::log(2 * M_PI * p2) - z * z / (2 * p2);
      acc += log_q - log_p;
    }
    EXPECT_NEAR(acc / n, exact, 0.01 * exact) << mu << " " << s2 << " " << p2;
  }
}

TEST(FMono, Values) {
  EXPECT_EQ(f_mono(1.0), 0.0);
  EXPECT_NEAR(f_mono(2.0), 1.0 - std::log(2.0), 1e-15);
  EXPECT_NEAR(f_mono(2.0), 0.3069, 1e-4);
  Rng rng(2);
  std::uniform_real_distribution<double> u(1.0, 50.0);
  for (int i = 0; i < 200; ++i) {
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    if (a < b) EXPECT_LT(f_mono(a), f_mono(b));
  }
  EXPECT_THROW(f_mono(0.0), std::invalid_argument);
}

TEST(VarianceOptimum, ArgminIsPrior) {
  for (double sp2 : {0.25, 1.0}) {
    auto r = verify_variance_optimum(sp2);
    EXPECT_NEAR(r.argmin_sigma_sq, sp2, 1e-6);
    EXPECT_LE(r.residual, 1e-6);
  }
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.01, 4.0);
  for (int i = 0; i < 20; ++i) EXPECT_LE(verify_variance_optimum(u(rng)).residual, 1e-6);
  EXPECT_THROW(verify_variance_optimum(0.0), std::invalid_argument);
}

TEST(KlSeparation, Examples) {
  auto a = verify_kl_separation({2.0, 0.25, 0.5});
  EXPECT_NEAR(a.kl_compact, 0.5 * f_mono(2.0), 1e-15);
  EXPECT_NEAR(a.kl_compact, 0.1534, 1e-4);
  EXPECT_NEAR(a.kl_unit, 0.5 * f_mono(0.5), 1e-15);
  EXPECT_FALSE(a.in_domain);

  auto b = verify_kl_separation({2.0, 1.0, 0.5});
  EXPECT_NEAR(b.kl_compact, 0.5 * (7.0 - std::log(8.0)), 1e-15);
  EXPECT_NEAR(b.kl_compact, 2.4603, 1e-4);
  EXPECT_NEAR(b.kl_unit, 0.1534, 1e-4);
  EXPECT_TRUE(b.holds);
  EXPECT_TRUE(b.in_domain);

  auto c = verify_kl_separation({2.0, 1.0, 1.0});
  EXPECT_EQ(c.kl_compact, c.kl_unit);
  EXPECT_FALSE(c.holds);
  EXPECT_FALSE(c.in_domain);

  auto sq = verify_kl_separation({2.0, 1.0, 0.5}, VarianceInflation::squared);
  EXPECT_NEAR(sq.kl_compact, 0.5 * f_mono(16.0), 1e-15);
  EXPECT_NEAR(sq.kl_unit, 0.5 * f_mono(4.0), 1e-15);

  EXPECT_THROW(verify_kl_separation({1.0, 1.0, 0.5}), std::invalid_argument);
  EXPECT_THROW(verify_kl_separation({2.0, 1.0, 1.5}), std::invalid_argument);
  EXPECT_THROW(verify_kl_separation({2.0, 0.0, 0.5}), std::invalid_argument);
}

TEST(KlSeparation, HoldsAcrossDomainGrid) {
  int in_domain = 0;
  for (double alpha = 0.05; alpha < 1.0; alpha += 0.05)
    for (double psi : {1.01, 1.5, 2.0, 3.0, 8.0})
      for (double sn2 : {0.2, 0.6, 1.0, 1.7, 5.0})
        for (auto inf : {VarianceInflation::linear, VarianceInflation::squared}) {
          auto r = verify_kl_separation({psi, sn2, alpha}, inf);
          if (!r.in_domain) continue;
          ++in_domain;
          EXPECT_TRUE(r.holds) << alpha << " " << psi << " " << sn2;
        }
  EXPECT_GT(in_domain, 100);
}

TEST(Jacobian, IdentityDecoder) {
  std::vector<double> mu{0.1, -0.4, 2.0}, s2(3, 0.3);
  EXPECT_NEAR(jacobian_trace_term(identity_decoder(), mu, s2), 3 * 0.3, 1e-9);
}

TEST(Jacobian, LinearOracleScalingAndStepHalving) {
  Rng rng(17);
  const std::size_t rows = 7, cols = 3;
  auto a = standard_normal(rng, rows * cols);
  auto mu = standard_normal(rng, cols);
  std::vector<double> s2{0.2, 0.9, 1.4};
  double analytic = 0.0;
  for (std::size_t c = 0; c < cols; ++c)
    for (std::size_t r = 0; r < rows; ++r) analytic += s2[c] * a[r * cols + c] * a[r * cols + c];
  auto dec = linear_decoder(a, rows, cols);
  const double est = jacobian_trace_term(dec, mu, s2, 1e-3);
  EXPECT_NEAR(est, analytic, 1e-6);
  std::vector<double> quarter(s2);
  for (auto& v : quarter) v *= 0.25;
  EXPECT_NEAR(jacobian_trace_term(dec, mu, quarter, 1e-3), 0.25 * est, 1e-12 * est);
  const double half = jacobian_trace_term(dec, mu, s2, 5e-4);
  EXPECT_LT(std::abs(half - est), 0.01 * est);
  EXPECT_THROW(jacobian_trace_term(dec, mu, s2, 0.0), std::invalid_argument);
}

TEST(Jacobian, NonlinearStepConvergesAndModelTermNonNegative) {
  BatchDecoder dec = [](const std::vector<std::vector<double>>& zs) {
    std::vector<std::vector<double>> out;
    for (const auto& z : zs) out.push_back({std::sin(z[0]) * z[1], std::tanh(z[0] + z[1])});
    return out;
  };
  std::vector<double> mu{0.3, 0.8}, s2{0.5, 0.25};
  const double a = jacobian_trace_term(dec, mu, s2, 1e-3);
  const double b = jacobian_trace_term(dec, mu, s2, 5e-4);
  EXPECT_LT(std::abs(a - b), 0.01 * a);

  auto c = GenConfig::for_dims(16, 2);
  c.arch.latent = 3;
  c.arch.channels = {4, 4, 4};
  auto model = init_model(c, 4);
  Rng rng(1);
  auto x = testutil::random_window(16, 2, rng);
  const double t = jacobian_trace_term(model, x);
  EXPECT_GE(t, 0.0);
  EXPECT_TRUE(std::isfinite(t));
}

TEST(Verification, AllChecksHoldByDefault) {
  auto checks = run_verification({});
  int optimum = 0, separation = 0;
  for (const auto& c : checks) {
    EXPECT_TRUE(c.holds) << c.name;
    optimum += c.name == "optimal_variance";
    separation += c.name == "kl_separation";
  }
  EXPECT_EQ(optimum, 20);
  EXPECT_GT(separation, 0);
  VerifyOptions strict;
  strict.optimum_tolerance = 0.0;
  strict.jacobian_tolerance = 0.0;
  bool any_fail = false;
  for (const auto& c : run_verification(strict)) any_fail = any_fail || !c.holds;
  EXPECT_TRUE(any_fail);
}
