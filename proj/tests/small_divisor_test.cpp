#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"

using namespace kam;
using namespace kam::testing;

namespace
{
FourierSeries e(std::initializer_list<int> k, Complex c = 1.0) { return FourierSeries::mode(MultiIndex(k), c); }
} // namespace

TEST(SolveL, Examples)
{
  const auto a = solve_L(e({1, 0}), kGolden, 4);
  EXPECT_NEAR(std::abs(a[MultiIndex({1, 0})] - Complex(0.0, -1.0)), 0.0, 1e-16);
  const auto b = solve_L(e({2, -1}), kGolden, 4);
  const Complex c = b[MultiIndex({2, -1})];
  EXPECT_NEAR(std::abs(c - 1.0 / Complex(0.0, 2.0 - kPhi)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(c), 2.618034, 1e-6);
}

TEST(SolveL, Preconditions)
{
  EXPECT_THROW(solve_L(FourierSeries::constant(2, 1.0) + e({1, 0}), kGolden, 4), PreconditionError);
  EXPECT_THROW(solve_L(e({5, 0}), kGolden, 4), PreconditionError);
  EXPECT_THROW(solve_L(e({1, -1}), std::vector<double>{1.0, 1.0}, 4), ResonanceError);
}

TEST(SolveL, RoundTripAndZeroMean)
{
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 5; ++trial)
  {
    const auto f = random_series(rng, 2, 16, 100, false);
    const auto Lf = solve_L(f, kGolden, 16);
    EXPECT_EQ(std::abs(Lf.mean()), 0.0);
    EXPECT_LE(coeff_distance(del_omega(Lf, kGolden), f), 1e-12);
  }
}

TEST(SolveL, LinearAndCommutesWithProjections)
{
  std::mt19937_64 rng(2);
  const auto f = random_series(rng, 2, 10, 30, false);
  const auto g = random_series(rng, 2, 10, 30, false);
  const Complex a(0.3, -1.2), b(2.0, 0.5);
  const auto lhs = solve_L(a * f + b * g, kGolden, 10);
  const auto rhs = a * solve_L(f, kGolden, 10) + b * solve_L(g, kGolden, 10);
  EXPECT_LE(coeff_distance(lhs, rhs), 1e-12 * lhs.max_abs());
  for (int K : {2, 5})
  {
    EXPECT_EQ(solve_L(project(f, K, Part::full_Pi), kGolden, 10), project(solve_L(f, kGolden, 10), K, Part::full_Pi));
    EXPECT_EQ(solve_L(project(f, K, Part::nonconstant_Pr1), kGolden, 10),
              project(solve_L(f, kGolden, 10), K, Part::nonconstant_Pr1));
  }
}

TEST(SdBound, SingleModes)
{
  for_each_in_ball(2, 6, [&](const MultiIndex& k) {
    if (k.is_zero()) return;
    const auto r = sd_bound_check(FourierSeries::mode(k), kGolden, 0.3, 6);
    EXPECT_NEAR(r.lhs, std::exp(0.3 * k.order()) / std::fabs(divisor(k, kGolden)), 1e-12 * r.lhs);
    const double rhs = 4.0 * std::exp(0.3 * 6) * omega_max(kGolden, 6) * std::sqrt(weight(k, 0.6));
    EXPECT_NEAR(r.rhs, rhs, 1e-12 * rhs);
    EXPECT_TRUE(r.holds(0.0));
  });
}

TEST(SdBound, RandomSweep)
{
  std::mt19937_64 rng(3);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial)
  {
    const auto f = random_series(rng, 2, 16, 20, false);
    const auto r = sd_bound_check(f, kGolden, 1.0 / 16, 16);
    EXPECT_TRUE(r.holds(0.0));
    worst = std::max(worst, r.ratio);
  }
  RecordProperty("worst_ratio", std::to_string(worst));
  EXPECT_LT(worst, 1.0);
}

TEST(CutoffBound, Examples)
{
  const int K = 8;
  for_each_in_ball(2, K, [&](const MultiIndex& k) {
    if (k.order() != K) return;
    const double s = 0.4, alpha = 0.5;
    const auto r = cutoff_bound_check(FourierSeries::mode(k), s, alpha, K);
    const double expect = std::sqrt(weight(k, 2 * alpha * s) / weight(k, 2 * s)) /
                          (std::pow(alpha, -1.0) * std::exp((alpha - 1) * s * K));
    EXPECT_NEAR(r.ratio, expect, 1e-12);
    EXPECT_TRUE(r.holds(0.0));
  });
  const auto one = cutoff_bound_check(e({3, 5}) + e({-8, 0}, 0.5), 0.7, 1.0, 8);
  EXPECT_NEAR(one.ratio, 1.0, 1e-15);
  EXPECT_THROW(cutoff_bound_check(e({1, 0}), 1.0, 0.5, 2), PreconditionError);
}

TEST(CutoffBound, RandomTails)
{
  std::mt19937_64 rng(4);
  const double r = 2 * std::log(512.0);
  for (int K : {8, 16})
    for (int trial = 0; trial < 50; ++trial)
    {
      auto f = random_series(rng, 2, 3 * K, 40, false);
      f = project(f, K - 1, Part::tail_I_minus_Pi);
      if (f.empty()) continue;
      EXPECT_TRUE(cutoff_bound_check(f, r / K, 0.5, K).holds(0.0));
    }
}

TEST(SchemeSd, CombinedEstimateOnGoldenFixture)
{
  std::mt19937_64 rng(5);
  const auto fd = normalize_time(estimate_alpha_tau(kGolden, 256, 1.0));
  const double r = 2 * std::log(512.0);
  for (int nu = 0; nu <= 3; ++nu)
  {
    const int K = 1 << (2 * nu);
    const double Delta = std::pow(K, 2.0);
    ASSERT_LE(omega_max(fd.omega, K), Delta / K);
    for (int trial = 0; trial < 10; ++trial)
    {
      const auto f = random_real_field(rng, 2, K, 8);
      EXPECT_TRUE(scheme_sd_check(f, fd.omega, r / K, K, Delta).holds(0.0)) << "K = " << K;
    }
  }
}
