#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "test_util.hpp"

using namespace kam;
using namespace kam::testing;

namespace
{

FourierSeries e(std::initializer_list<int> k, Complex c = 1.0) { return FourierSeries::mode(MultiIndex(k), c); }

} // namespace

TEST(Weight, Examples)
{
  EXPECT_EQ(weight(MultiIndex({0, 0}), 3.7), 1.0);
  EXPECT_NEAR(weight(MultiIndex({1, 0}), 1.0), 1.175201, 1e-6);
  EXPECT_NEAR(weight(MultiIndex({1, 1}), 2.0), std::pow(std::sinh(2.0) / 2.0, 2), 1e-15);
  EXPECT_NEAR(weight(MultiIndex({1, 1}), 2.0), 3.288528, 2e-6); // quoted value is rounded from 3.2885291
  EXPECT_NEAR(std::sqrt(weight(MultiIndex({1, 1}), 2.0)), 1.813430, 1e-6);
}

TEST(Weight, SeriesBranchIsContinuous)
{
  for (double x : {0.5e-4, 0.99e-4, 1.01e-4, 2e-4})
    EXPECT_NEAR(sinhc(x), std::sinh(x) / x, 1e-15);
}

TEST(Weight, TableInvariants)
{
  WeightTable w(0.7);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i)
  {
    const auto k = random_index(rng, 3, 12, true);
    EXPECT_GE(w(k), 1.0);
    EXPECT_EQ(w(k), w(-k));
    EXPECT_LE(weight(k, 0.5), weight(k, 0.7));
  }
  EXPECT_EQ(w(MultiIndex(3)), 1.0);
}

TEST(NormExp, Examples)
{
  EXPECT_EQ(norm_exp(FourierSeries::constant(2, Complex(3.0, -4.0)), 2.0), 5.0);
  EXPECT_NEAR(norm_exp(e({1, 0}), 0.5), 1.648721, 1e-6);
  EXPECT_EQ(norm_exp(e({1, 0}, 2.0) + e({0, -2}), 0.0), 3.0);
  EXPECT_TRUE(std::isinf(norm_exp(e({800, 0}), 1.0)));
}

TEST(NormMeanL2, Examples)
{
  EXPECT_EQ(norm_mean_l2(FourierSeries::constant(2, Complex(3.0, -4.0)), 2.0), 5.0);
  EXPECT_NEAR(norm_mean_l2(e({1, 0}), 0.5), 1.084067, 1e-6);
}

TEST(NormMeanL2, MatchesQuadratureOfMeanIntegral)
{
  const auto f = e({1, 0}) + e({1, 1}, 0.5);
  EXPECT_NEAR(mean_square_quadrature(f, 0.3), std::pow(norm_mean_l2(f, 0.3), 2), 1e-10);
  std::mt19937_64 rng(2);
  for (double s : {0.1, 0.5, 1.0})
    for (int trial = 0; trial < 3; ++trial)
    {
      const auto g = random_series(rng, 2, 4, 6);
      const double quad = mean_square_quadrature(g, s);
      EXPECT_NEAR(quad, std::pow(norm_mean_l2(g, s), 2), 1e-6 * std::max(1.0, quad)) << "s = " << s;
    }
}

TEST(Norms, MeanL2BelowExp)
{
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial)
  {
    const auto f = random_series(rng, 2, 10, 20);
    for (double s : {0.0, 0.2, 1.0}) EXPECT_LE(norm_mean_l2(f, s), norm_exp(f, s) * (1 + 1e-14));
  }
}

TEST(Norms, ProductInequalities)
{
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial)
  {
    const auto f = random_series(rng, 2, 6, 10);
    const auto g = random_series(rng, 2, 6, 10);
    const auto fg = multiply(f, g, 100);
    for (double s : {0.0, 0.3, 1.0})
    {
      EXPECT_LE(norm_mean_l2(fg, s), norm_exp(f, s) * norm_mean_l2(g, s) * (1 + 1e-12));
      EXPECT_LE(norm_exp(fg, s), norm_exp(f, s) * norm_exp(g, s) * (1 + 1e-12));
    }
  }
}

TEST(Norms, WeightSubmultiplicative)
{
  for (double s : {0.5, 1.0, 2.0})
    for_each_in_ball(2, 20, [&](const MultiIndex& k) {
      if ((k[0] + 3 * k[1]) % 7 != 0) return; // thin the pairs
      for_each_in_ball(2, 20, [&](const MultiIndex& l) {
        if ((l[0] * 5 + l[1]) % 5 != 0) return;
        const auto r = weight_submultiplicative_check(k, l, s);
        EXPECT_TRUE(r.holds(1e-12)) << k.str() << " " << l.str() << " s=" << s;
      });
    });
}

TEST(Norms, WeightRatioBound)
{
  const std::vector<std::pair<double, double>> widths{{0.5, 1.0}, {0.5, 2.0}, {1.0, 2.0}, {1.0, 1.0}};
  for (auto [s, t] : widths)
    for_each_in_ball(2, 20, [&](const MultiIndex& k) {
      EXPECT_TRUE(weight_ratio_check(k, s, t).holds(1e-12)) << k.str();
    });
  // The factor must be (t/s)^n: at k = 0 the left side is 1 while (s/t)^n < 1.
  const auto r0 = weight_ratio_check(MultiIndex(2), 0.5, 1.0);
  EXPECT_EQ(r0.lhs, 1.0);
  EXPECT_GT(1.0, std::pow(0.5 / 1.0, 2));
}

TEST(NormBlock, Examples)
{
  EXPECT_NEAR(norm_block(e({1, 0}) + e({0, 2}), 2.0, BlockBase::of(2)), 5.0, 1e-14);
  for (const auto& k : {MultiIndex({1, 0}), MultiIndex({3, -2}), MultiIndex({0, 7})})
  {
    const double expect = std::pow(k.order(), 1.5);
    EXPECT_NEAR(norm_block(FourierSeries::mode(k), 1.5, BlockBase::one()), expect, 1e-12);
    EXPECT_NEAR(norm_block(FourierSeries::mode(k), 1.5, BlockBase::of(3)), expect, 1e-12);
    EXPECT_NEAR(norm_block(FourierSeries::mode(k), 1.5, BlockBase::infinity()), expect, 1e-12);
  }
  EXPECT_THROW(norm_block(FourierSeries::constant(2, 1.0), 1.0, BlockBase::of(2)), PreconditionError);
}

TEST(NormBlock, BlockBoundaries)
{
  EXPECT_EQ(block_index(1, 2), 0);
  EXPECT_EQ(block_index(2, 2), 1);
  EXPECT_EQ(block_index(3, 2), 2);
  EXPECT_EQ(block_index(4, 2), 2);
  EXPECT_EQ(block_index(5, 4), 2);
  EXPECT_EQ(block_index(16, 4), 2);
  EXPECT_EQ(block_index(17, 4), 3);
}

TEST(NormBlock, MonotoneInBase)
{
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial)
  {
    const auto P = random_series(rng, 2, 30, 50, false);
    for (long b : {2L, 3L, 4L})
    {
      const double r = 1.5;
      const double one = norm_block(P, r, BlockBase::one());
      const double nb = norm_block(P, r, BlockBase::of(b));
      const double nb2 = norm_block(P, r, BlockBase::of(b * b));
      const double inf = norm_block(P, r, BlockBase::infinity());
      EXPECT_GE(one * (1 + 1e-14), nb);
      EXPECT_GE(nb * (1 + 1e-14), nb2);
      EXPECT_GE(nb2 * (1 + 1e-14), inf);
      EXPECT_LE(norm_block(P, r - 0.5, BlockBase::of(b)), nb);
    }
  }
}

TEST(NormM, Examples)
{
  const PowerWeight m{2.0};
  EXPECT_NEAR(norm_m(e({2, 1}, 0.5), m), 0.5 * 9.0, 1e-14);
  // m_k = |k|^{tau+1}: 9 at tau = 1, 27 at tau = 2
  EXPECT_EQ(PowerWeight{1.0 + 1.0}(MultiIndex({2, 1})), 9.0);
  EXPECT_EQ(PowerWeight{2.0 + 1.0}(MultiIndex({2, 1})), 27.0);
  std::map<MultiIndex, double> table{{MultiIndex({1, 0}), 2.0}};
  EXPECT_EQ(norm_m(e({1, 0}, 3.0), table), 6.0);
  EXPECT_THROW(norm_m(e({0, 1}), table), ConfigurationError);
}

TEST(NormM, DeltaPBoundOnBlocks)
{
  std::mt19937_64 rng(6);
  const double tau = 1.0, b = 4.0, r = 2 * std::log(512.0);
  const PowerWeight m{tau + 1};
  for (int nu = 0; nu <= 3; ++nu)
  {
    const int K_prev = nu == 0 ? 0 : static_cast<int>(std::pow(b, nu - 1));
    const int K = static_cast<int>(std::pow(b, nu));
    const double m_nu = nu == 0 ? 1.0 : std::pow(K_prev + 1, tau + 1);
    const double s = r / K;
    for (int trial = 0; trial < 20; ++trial)
    {
      auto dP = random_real_field(rng, 2, K, 10, 1.0);
      dP = map_components(dP, [&](const FourierSeries& c) { return project_shell(c, K_prev, K); });
      if (dP.is_zero()) continue;
      EXPECT_TRUE(delta_p_bound_check(dP, s, m_nu, r, m).holds()) << "nu = " << nu;
    }
  }
}

TEST(Cauchy, Examples)
{
  const TorusMapField phi({FourierSeries(2), e({0, 1})});
  const auto c0 = cauchy_bound_check(FourierSeries::constant(2, 2.0), phi, 1.0, 0.5);
  EXPECT_EQ(c0.lhs, 0.0);
  // f = e_(1,0) paired with phi in the first direction gives Df.phi = i e_(1,1)
  const TorusMapField phi1({e({0, 1}), FourierSeries(2)});
  const auto r = cauchy_bound_check(e({1, 0}), phi1, 1.0, 0.5);
  EXPECT_NEAR(r.lhs, std::sqrt(weight(MultiIndex({1, 1}), 1.0)), 1e-14);
  EXPECT_NEAR(r.lhs, 1.175201, 1e-6);
  const double rhs = 4.0 * std::sqrt(std::sinh(2.0) / 2.0);
  EXPECT_NEAR(r.rhs, rhs, 1e-12);
  EXPECT_NEAR(r.ratio, 0.218, 1e-3);
}

TEST(Cauchy, RandomSweep)
{
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ua(0.05, 0.95), us(0.05, 2.0);
  for (int trial = 0; trial < 200; ++trial)
  {
    const auto f = random_series(rng, 2, 6, 8);
    const auto phi = random_real_field(rng, 2, 4, 3, 1.0, true);
    const double alpha = ua(rng), s = us(rng);
    const auto r = cauchy_bound_check(f, phi, s, alpha);
    EXPECT_TRUE(r.holds(1e-12)) << "ratio " << r.ratio << " alpha " << alpha << " s " << s;
  }
}
