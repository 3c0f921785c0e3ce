#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"

using namespace kam;
using namespace kam::testing;

namespace
{

FourierSeries e(std::initializer_list<int> k, Complex c = 1.0) { return FourierSeries::mode(MultiIndex(k), c); }

NearIdentityTransform constant_jacobian_transform(double a)
{
  NearIdentityTransform psi = identity_transform(2);
  const std::vector<double> m{a, 0.0, 0.0, 0.0};
  psi.dhat = JacobianField::constant(2, m);
  psi.inv_dev = invert_near_identity(psi.dhat, 0.0, 1e-18, 4).deviation;
  return psi;
}

// Fixed point of phi' = Pi_K [2 eps cos(x + phi)] - mean, Z = mean, solved on a
// 1-d grid with direct cosine evaluation; independent of the series machinery.
struct CosineOracle
{
  double Z = 0.0;
  std::vector<Complex> phi; // coefficients for k = -K..K
};

CosineOracle cosine_oracle(double eps, int K, int iterations)
{
  const int N = 256;
  std::vector<Complex> phi(2 * K + 1, 0.0);
  double Z = 0.0;
  for (int it = 0; it < iterations; ++it)
  {
    std::vector<double> vals(N);
    for (int p = 0; p < N; ++p)
    {
      const double x = 2 * std::numbers::pi * p / N;
      Complex ph = 0.0;
      for (int k = -K; k <= K; ++k) ph += phi[k + K] * std::polar(1.0, k * x);
      vals[p] = 2 * eps * std::cos(x + ph.real());
    }
    std::vector<Complex> next(2 * K + 1, 0.0);
    for (int k = -K; k <= K; ++k)
    {
      Complex c = 0.0;
      for (int p = 0; p < N; ++p) c += vals[p] * std::polar(1.0, -k * 2 * std::numbers::pi * p / N);
      c /= N;
      if (k == 0)
        Z = c.real();
      else
        next[k + K] = c / Complex(0.0, k);
    }
    phi = next;
  }
  return {Z, phi};
}

} // namespace

TEST(TOperator, Examples)
{
  std::mt19937_64 rng(1);
  const auto Q = random_real_field(rng, 2, 4, 4);
  const std::vector<double> zero{0.0, 0.0}, Z{1.0, 0.0};
  EXPECT_EQ(T_operator(zero, TorusMapField(2), Q, JacobianField(2), 8), Q);

  const auto phi = scaled_to(random_real_field(rng, 2, 2, 3), 0.0, 0.05);
  const auto a = T_operator(Z, phi, Q, JacobianField(2), 12);
  ComposeOptions o;
  o.output_order = 12;
  EXPECT_EQ(a, compose(Q, phi, o));

  // D Psi = diag(1 + a, 1): Theta = diag(a/(1+a), 0), so T = Q + (a/(1+a), 0)
  const auto psi = constant_jacobian_transform(0.1);
  const auto t = T_operator(Z, TorusMapField(2), Q, psi.theta(), 8);
  const auto diff = t - Q;
  EXPECT_NEAR(diff[0].mean().real(), 0.1 / 1.1, 1e-15);
  EXPECT_EQ(diff[0].size(), 1u);
  EXPECT_TRUE(diff[1].empty());
}

TEST(SolveStep, ZeroQ)
{
  const auto in = make_step_input(identity_transform(2), TorusMapField(2), golden_normalized(), 4, kSchemeR / 4);
  const auto out = solve_step(in);
  EXPECT_EQ(out.diag.iterations, 1);
  EXPECT_EQ(norm_const(out.Z), 0.0);
  EXPECT_TRUE(out.Phi_hat.is_zero());
  EXPECT_TRUE(out.Q_plus.is_zero());
}

TEST(SolveStep, CosinePerturbationMatchesIteratedOracle)
{
  const double eps = 1e-6;
  const int K = 2;
  TorusMapField Q(2);
  Q[0] = eps * (e({1, 0}) + e({-1, 0}));
  const auto in = make_step_input(identity_transform(2), Q, kGolden, K, 1.0);
  ASSERT_LE(4 * in.Delta * norm_mean_l2(Q, 1.0), 0.25);
  const auto out = solve_step(in);
  const auto oracle = cosine_oracle(eps, K, 200);
  EXPECT_NEAR(out.Z[0], oracle.Z, 1e-20);
  EXPECT_NEAR(out.Z[1], 0.0, 1e-20);
  for (int k = -K; k <= K; ++k)
    EXPECT_NEAR(std::abs(out.Phi_hat[0][MultiIndex({k, 0})] - oracle.phi[k + K]), 0.0, 1e-19) << k;
  EXPECT_TRUE(out.Phi_hat[1].empty());
  // first-order prediction: Phi_hat ~ eps L(e_1 + e_-1), Z = O(eps^2)
  const Complex first = eps / Complex(0.0, 1.0);
  EXPECT_NEAR(std::abs(out.Phi_hat[0][MultiIndex({1, 0})] - first), 0.0, 10 * eps * eps);
  EXPECT_LE(std::abs(out.Z[0]), 10 * eps * eps);
}

TEST(SolveStep, GoldenFixtureContraction)
{
  std::mt19937_64 rng(2);
  for (double load : {0.01, 0.1, 0.25})
  {
    const auto in = admissible_step_input(rng, 16, load);
    const auto out = solve_step(in);
    EXPECT_TRUE(out.diag.violations.empty());
    EXPECT_LE(out.diag.max_contraction(), 0.55) << "load " << load;
    EXPECT_TRUE(out.diag.ball.holds(1e-9)) << out.diag.ball.ratio;
    EXPECT_LE(out.diag.fixed_point_residual, 2 * out.diag.tol);
    EXPECT_LE(out.diag.identity_residual, out.diag.identity_budget)
        << out.diag.identity_residual << " budget " << out.diag.identity_budget;
    EXPECT_TRUE(out.diag.dphi.holds());
    EXPECT_TRUE(out.diag.dphi_inverse.holds());
    EXPECT_TRUE(out.diag.q_plus.holds()) << out.diag.q_plus.ratio;
  }
}

TEST(SolveStep, UniqueFixedPoint)
{
  std::mt19937_64 rng(3);
  const auto in = admissible_step_input(rng, 16, 0.1);
  const auto a = solve_step(in);
  StepOptions opt;
  opt.start_Z = std::vector<double>{0.5 * a.diag.ball.rhs / in.Delta, -0.3 * a.diag.ball.rhs / in.Delta};
  TorusMapField phi0 = random_real_field(rng, 2, 16, 4);
  phi0 = project(phi0, 16, Part::nonconstant_Pr1);
  phi0 *= 0.5 * a.diag.ball.rhs / (16 * norm_exp(phi0, 0.5 * in.s));
  opt.start_Phi = phi0;
  opt.tol = a.diag.tol;
  const auto b = solve_step(in, opt);
  double dz = 0.0;
  for (int i = 0; i < 2; ++i) dz = std::max(dz, std::abs(a.Z[i] - b.Z[i]));
  const double dist = std::max(in.Delta * dz, 16 * norm_exp(a.Phi_hat - b.Phi_hat, 0.5 * in.s));
  EXPECT_LE(dist, 10 * a.diag.tol);
}

TEST(SolveStep, PreconditionPolicy)
{
  std::mt19937_64 rng(4);
  const auto in = admissible_step_input(rng, 4, 0.6);
  try
  {
    solve_step(in);
    FAIL() << "expected a step precondition error";
  }
  catch (const StepPreconditionError& err)
  {
    EXPECT_EQ(err.bound(), "4Delta|||Q|||_s<=1/4");
    EXPECT_GT(err.lhs(), err.rhs());
  }
  StepOptions opt;
  opt.policy = PreconditionPolicy::report;
  const auto out = solve_step(in, opt);
  ASSERT_EQ(out.diag.violations.size(), 1u);

  auto small_sk = make_step_input(identity_transform(2), in.Q, golden_normalized(), 4, 0.3);
  small_sk.Q *= 1e-6;
  EXPECT_THROW(solve_step(small_sk), StepPreconditionError);
}

TEST(FormQPlus, TrigPolynomialWithIdentityPsi)
{
  std::mt19937_64 rng(5);
  const int K = 8;
  auto in = make_step_input(identity_transform(2), random_real_field(rng, 2, K, 5), golden_normalized(), K,
                            kSchemeR / K);
  in.Q *= 0.1 / (4 * in.Delta * norm_mean_l2(in.Q, in.s));
  const auto out = solve_step(in);
  // the Pi-part of T cancels; what survives on |k| <= K is D Phi^{-1} acting on the tail
  const auto T = T_operator(out.Z, out.Phi_hat, in.Q, in.psi.theta(), 2 * K);
  const auto R = project(T, K, Part::tail_I_minus_Pi);
  const double low = norm_exp(project(out.Q_plus, K, Part::full_Pi), 0.0);
  const double mu = norm_exp(derivative(out.Phi_hat), 0.0);
  EXPECT_LE(low, 2 * mu * norm_exp(R, 0.0) + 1e-30);
  EXPECT_LT(coeff_distance(project(out.Q_plus, K, Part::tail_I_minus_Pi), R), 2 * mu * norm_exp(R, 0.0) + 1e-30);
  EXPECT_FALSE(out.Q_plus.is_zero());
}

// With no modes above K the right side of the Q+ bound vanishes while the nonlinear
// tail of Q o Phi does not, so that inequality cannot hold for such Q.
TEST(FormQPlus, BoundFailsWithoutTail)
{
  std::mt19937_64 rng(6);
  const auto in = admissible_step_input(rng, 4, 0.1, 0.0, 0.0);
  ASSERT_TRUE(project(in.Q, 4, Part::tail_I_minus_Pi).is_zero());
  const auto out = solve_step(in);
  EXPECT_EQ(out.diag.q_plus.rhs, 0.0);
  EXPECT_GT(out.diag.q_plus.lhs, 0.0);
  EXPECT_FALSE(out.diag.q_plus.holds());
}

TEST(SolveStep, AdmissibleSweep)
{
  std::mt19937_64 rng(7);
  for (int K : {4, 16, 64})
    for (int trial = 0; trial < 3; ++trial)
    {
      const auto in = admissible_step_input(rng, K, 0.05 + 0.05 * trial);
      const auto out = solve_step(in);
      EXPECT_LE(out.diag.max_contraction(), 0.55);
      EXPECT_TRUE(out.diag.ball.holds(1e-9));
      EXPECT_TRUE(out.diag.q_plus.holds()) << "K " << K << " ratio " << out.diag.q_plus.ratio;
      EXPECT_LE(out.diag.identity_residual, out.diag.identity_budget) << "K " << K;
    }
}
