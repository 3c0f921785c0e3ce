#ifndef KAM_SMALL_DIVISOR_HPP_
#define KAM_SMALL_DIVISOR_HPP_

#include <cmath>
#include <span>

#include "kam/diophantine.hpp"
#include "kam/norms.hpp"

namespace kam
{

/// L f = sum_{k != 0} f_k / (i <k, omega>) e_k, the zero-mean solution of d_omega phi = f.
inline FourierSeries solve_L(const FourierSeries& f, std::span<const double> omega, int K)
{
  if (static_cast<int>(omega.size()) != f.dim()) throw StructuralError("solve_L: omega dimension mismatch");
  if (std::abs(f.mean()) != 0.0) throw PreconditionError("solve_L: f must have zero mean");
  if (f.order() > K)
    throw PreconditionError("solve_L: f has order " + std::to_string(f.order()) + " > K = " + std::to_string(K));
  detail::check_omega(omega);
  const double scale = detail::omega_scale(omega);
  std::vector<FourierSeries::Term> out;
  out.reserve(f.size());
  for (const auto& [k, c] : f.terms())
  {
    const double d = divisor(k, omega);
    detail::check_resonance(k, d, scale);
    out.emplace_back(k, c / Complex(0.0, d));
  }
  return FourierSeries::from_sorted(f.dim(), std::move(out));
}

inline TorusMapField solve_L(const TorusMapField& f, std::span<const double> omega, int K)
{
  return map_components(f, [&](const FourierSeries& c) { return solve_L(c, omega, K); });
}

/// ||L f||_s <= 2^n e^{sK} Omega(K) |||f|||_s.
inline BoundReport sd_bound_check(const FourierSeries& f, std::span<const double> omega, double s, int K)
{
  const int n = f.dim();
  const double lhs = norm_exp(solve_L(f, omega, K), s);
  const double Omega = omega_max(omega, K);
  const double rhs = std::ldexp(1.0, n) * exp_weight(K, s) * Omega * norm_mean_l2(f, s);
  return make_report("sd", lhs, rhs, {{"s", s}, {"K", K}, {"Omega", Omega}});
}

/// |||f|||_{alpha s} <= alpha^{-n/2} e^{(alpha-1) s K} |||f|||_s for f supported on |k| >= K.
inline BoundReport cutoff_bound_check(const FourierSeries& f_tail, double s, double alpha, int K)
{
  if (!(alpha > 0.0 && alpha <= 1.0)) throw PreconditionError("cutoff_bound_check: need 0 < alpha <= 1");
  for (const auto& [k, c] : f_tail.terms())
    if (k.order() < K)
      throw PreconditionError("cutoff_bound_check: mode " + k.str() + " lies below the cutoff K = " +
                              std::to_string(K));
  const int n = f_tail.dim();
  const double lhs = norm_mean_l2(f_tail, alpha * s);
  const double rhs = std::pow(alpha, -0.5 * n) * std::exp((alpha - 1.0) * s * K) * norm_mean_l2(f_tail, s);
  return make_report("cut", lhs, rhs, {{"s", s}, {"alpha", alpha}, {"K", K}});
}

/// K ||L f||_s and ||D L f||_s against 2^n e^{sK} Delta |||f|||_s, with Delta >= K Omega(K).
inline BoundReport scheme_sd_check(const TorusMapField& f, std::span<const double> omega, double s, int K,
                                   double Delta)
{
  const int n = f.dim();
  const TorusMapField Lf = solve_L(f, omega, K);
  const double lhs = std::max(K * norm_exp(Lf, s), norm_exp(derivative(Lf), s));
  const double rhs = std::ldexp(1.0, n) * exp_weight(K, s) * Delta * norm_mean_l2(f, s);
  return make_report("sd_scheme", lhs, rhs, {{"s", s}, {"K", K}, {"Delta", Delta}});
}

} // namespace kam

#endif
