#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"

using namespace kam;
using namespace kam::testing;

namespace
{

// Independent minimum search: enumerates the box [-K, K]^n in reverse order and filters by |k|_1.
double min_divisor_reverse(const std::vector<double>& omega, int K, MultiIndex* arg = nullptr)
{
  const int n = static_cast<int>(omega.size());
  double best = kInf;
  std::vector<int> k(n, K);
  for (;;)
  {
    MultiIndex m(n);
    long double dot = 0.0L;
    for (int i = 0; i < n; ++i)
    {
      m[i] = k[i];
      dot += static_cast<long double>(k[i]) * omega[i];
    }
    if (!m.is_zero() && m.order() <= K && std::fabs(static_cast<double>(dot)) < best)
    {
      best = std::fabs(static_cast<double>(dot));
      if (arg) *arg = m;
    }
    int i = n - 1;
    while (i >= 0 && k[i] == -K) k[i--] = K;
    if (i < 0) break;
    --k[i];
  }
  return best;
}

} // namespace

TEST(OmegaMax, GoldenExamples)
{
  MultiIndex arg;
  EXPECT_DOUBLE_EQ(omega_max(kGolden, 1, &arg), 1.0);
  EXPECT_EQ(arg.order(), 1);
  EXPECT_EQ(std::abs(arg[0]), 1);
  EXPECT_NEAR(omega_max(kGolden, 3, &arg), kPhi * kPhi, 1e-13);
  EXPECT_NEAR(omega_max(kGolden, 3), 2.618034, 1e-6);
  EXPECT_EQ(std::abs(arg[0]), 2);
  EXPECT_EQ(arg[0] * arg[1], -2);
  EXPECT_THROW(omega_max(kGolden, 0), EmptyDomainError);
}

TEST(OmegaMax, ResonanceDetected)
{
  const std::vector<double> w{1.0, 1.0};
  try
  {
    omega_max(w, 2);
    FAIL() << "no resonance reported";
  }
  catch (const ResonanceError& e)
  {
    EXPECT_FALSE(e.index().empty());
  }
}

TEST(OmegaMax, MatchesReverseEnumerationOracle)
{
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (int trial = 0; trial < 10; ++trial)
  {
    const int n = 2 + trial % 2;
    std::vector<double> w(n);
    for (auto& x : w) x = u(rng);
    const int K = n == 2 ? 40 : 12;
    const double oracle = min_divisor_reverse(w, K);
    EXPECT_NEAR(omega_max(w, K) * oracle, 1.0, 1e-12);
  }
}

TEST(OmegaTable, NondecreasingAndConsistent)
{
  const auto table = omega_table(kGolden, 64);
  double prev = 0.0;
  for (const auto& [K, v] : table)
  {
    EXPECT_GE(v, prev);
    prev = v;
  }
  for (int K : {1, 3, 16, 64}) EXPECT_DOUBLE_EQ(table.at(K), omega_max(kGolden, K));
  // Fibonacci minimizers: Omega(16) from (8, -5), Omega(64) from (34, -21)
  EXPECT_NEAR(table.at(16), 1.0 / std::fabs(8 - 5 * kPhi), 1e-9);
  EXPECT_NEAR(table.at(64), 1.0 / std::fabs(34 - 21 * kPhi), 1e-9 * table.at(64));
}

TEST(AlphaTau, GoldenFit)
{
  const auto fd = estimate_alpha_tau(kGolden, 100, 1.0);
  double oracle = kInf;
  for_each_in_ball(2, 100, [&](const MultiIndex& k) {
    if (!k.is_zero()) oracle = std::min(oracle, std::fabs(k[0] + k[1] * kPhi) * k.order());
  });
  EXPECT_NEAR(fd.alpha, oracle, 1e-12);
  EXPECT_GT(fd.alpha, 0.0);
  EXPECT_THROW(estimate_alpha_tau(kGolden, 10, 0.5), PreconditionError);
  EXPECT_THROW(estimate_alpha_tau(std::vector<double>{1.0, 1.0}, 5, 1.0), ResonanceError);
}

TEST(AlphaTau, NormalizeTime)
{
  const auto fd = estimate_alpha_tau(kGolden, 60, 1.0);
  const auto nd = normalize_time(fd);
  EXPECT_EQ(nd.alpha, 1.0);
  const auto refit = estimate_alpha_tau(nd.omega, 60, 1.0);
  EXPECT_NEAR(refit.alpha, 1.0, 1e-14);
  for (int K : {1, 5, 20, 60})
  {
    MultiIndex a, b;
    omega_max(fd.omega, K, &a);
    omega_max(nd.omega, K, &b);
    EXPECT_EQ(a, b) << "K = " << K;
    EXPECT_NEAR(nd.omega_table.at(K), omega_max(nd.omega, K), 1e-12 * nd.omega_table.at(K));
  }
}

TEST(Ruessmann, Examples)
{
  const auto r1 = ruessmann_sum_check(kGolden, 1);
  EXPECT_NEAR(r1.lhs, 2.0 * (1.0 + 1.0 / (kPhi * kPhi)), 1e-14);
  EXPECT_NEAR(r1.lhs, 2.7639, 1e-4);
  EXPECT_EQ(r1.rhs, 16.0);
  EXPECT_NEAR(r1.ratio, 0.173, 1e-3);
  EXPECT_TRUE(ruessmann_sum_check(kGolden, 8).holds(0.0));
  const std::vector<double> twice{2.0, 2.0 * kPhi};
  const auto r2 = ruessmann_sum_check(twice, 8);
  const auto r8 = ruessmann_sum_check(kGolden, 8);
  EXPECT_NEAR(r2.lhs * 4, r8.lhs, 1e-12 * r8.lhs);
  EXPECT_NEAR(r2.rhs * 4, r8.rhs, 1e-12 * r8.rhs);
  EXPECT_NEAR(r2.ratio, r8.ratio, 1e-12);
}

TEST(Ruessmann, RandomFrequencies)
{
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.3, 3.0);
  for (int trial = 0; trial < 20; ++trial)
  {
    std::vector<double> w{1.0, u(rng)};
    for (int K : {4, 8, 16, 32}) EXPECT_TRUE(ruessmann_sum_check(w, K).holds(0.0)) << "K = " << K;
  }
}
