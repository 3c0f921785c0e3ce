#ifndef KAM_DIOPHANTINE_HPP_
#define KAM_DIOPHANTINE_HPP_

#include <cmath>
#include <map>
#include <span>
#include <vector>

#include "kam/divisor.hpp"
#include "kam/norms.hpp"

namespace kam
{

inline constexpr double kResonanceRelative = 1e-14;

struct FrequencyData
{
  std::vector<double> omega;
  double tau = 1.0;
  double alpha = 1.0;
  std::map<int, double> omega_table; ///< K -> Omega(K)
};

namespace detail
{
inline double omega_scale(std::span<const double> omega)
{
  double m = 0.0;
  for (double w : omega) m = std::max(m, std::abs(w));
  return m;
}

inline void check_resonance(const MultiIndex& k, double d, double scale)
{
  if (std::abs(d) < kResonanceRelative * k.order() * scale)
    throw ResonanceError("frequency vector is resonant at k = " + k.str(), k.str());
}

inline void check_omega(std::span<const double> omega)
{
  if (omega.empty() || static_cast<int>(omega.size()) > kMaxDim)
    throw StructuralError("frequency vector must have 1.." + std::to_string(kMaxDim) + " components");
  for (double w : omega)
    if (!std::isfinite(w)) throw PreconditionError("frequency vector has a non-finite component");
}

// Calls fn(k, <k, omega>) for 0 < |k| <= K after the resonance check.
template <class Fn>
void for_each_divisor(std::span<const double> omega, int K, Fn&& fn)
{
  check_omega(omega);
  const double scale = omega_scale(omega);
  for_each_in_ball(static_cast<int>(omega.size()), K, [&](const MultiIndex& k) {
    if (k.is_zero()) return;
    const double d = divisor(k, omega);
    check_resonance(k, d, scale);
    fn(k, d);
  });
}
} // namespace detail

/// Omega(K) = max_{0<|k|<=K} 1/|<k, omega>|, by exhaustive enumeration.
inline double omega_max(std::span<const double> omega, int K, MultiIndex* argmin = nullptr)
{
  if (K < 1) throw EmptyDomainError("omega_max: no indices with 0 < |k| <= " + std::to_string(K));
  double best = kInf;
  MultiIndex arg;
  detail::for_each_divisor(omega, K, [&](const MultiIndex& k, double d) {
    if (std::abs(d) < best)
    {
      best = std::abs(d);
      arg = k;
    }
  });
  if (argmin) *argmin = arg;
  return 1.0 / best;
}

/// Omega(K) for every K = 1..K_max from a single pass over the ball.
inline std::map<int, double> omega_table(std::span<const double> omega, int K_max)
{
  if (K_max < 1) throw EmptyDomainError("omega_table: K_max must be >= 1");
  std::vector<double> shell_min(static_cast<std::size_t>(K_max) + 1, kInf);
  detail::for_each_divisor(omega, K_max, [&](const MultiIndex& k, double d) {
    double& m = shell_min[k.order()];
    m = std::min(m, std::abs(d));
  });
  std::map<int, double> table;
  double running = kInf;
  for (int K = 1; K <= K_max; ++K)
  {
    running = std::min(running, shell_min[K]);
    table[K] = 1.0 / running;
  }
  return table;
}

/// Largest alpha with |<k, omega>| >= alpha |k|^{-tau} on 0 < |k| <= K_max.
inline FrequencyData estimate_alpha_tau(std::span<const double> omega, int K_max, double tau)
{
  if (K_max < 1) throw PreconditionError("estimate_alpha_tau: K_max must be >= 1");
  const int n = static_cast<int>(omega.size());
  if (tau < n - 1) throw PreconditionError("estimate_alpha_tau: tau must be >= n - 1");
  FrequencyData fd;
  fd.omega.assign(omega.begin(), omega.end());
  fd.tau = tau;
  double alpha = kInf;
  std::vector<double> shell_min(static_cast<std::size_t>(K_max) + 1, kInf);
  detail::for_each_divisor(omega, K_max, [&](const MultiIndex& k, double d) {
    alpha = std::min(alpha, std::abs(d) * std::pow(k.order(), tau));
    double& m = shell_min[k.order()];
    m = std::min(m, std::abs(d));
  });
  fd.alpha = alpha;
  double running = kInf;
  for (int K = 1; K <= K_max; ++K)
  {
    running = std::min(running, shell_min[K]);
    fd.omega_table[K] = 1.0 / running;
  }
  return fd;
}

/// Rescales time so that alpha = 1: omega -> omega / alpha, Omega -> alpha Omega.
inline FrequencyData normalize_time(const FrequencyData& fd)
{
  if (!(fd.alpha > 0.0)) throw PreconditionError("normalize_time: alpha must be positive");
  FrequencyData out = fd;
  for (double& w : out.omega) w /= fd.alpha;
  for (auto& [K, v] : out.omega_table) v *= fd.alpha;
  out.alpha = 1.0;
  return out;
}

/// sum_{0<|k|<=K} <k, omega>^{-2} <= 2^{n+2} Omega(K)^2.
inline BoundReport ruessmann_sum_check(std::span<const double> omega, int K)
{
  if (K < 1) throw EmptyDomainError("ruessmann_sum_check: K must be >= 1");
  double lhs = 0.0, dmin = kInf;
  detail::for_each_divisor(omega, K, [&](const MultiIndex&, double d) {
    lhs += 1.0 / (d * d);
    dmin = std::min(dmin, std::abs(d));
  });
  const double Omega = 1.0 / dmin;
  const double rhs = std::ldexp(1.0, static_cast<int>(omega.size()) + 2) * Omega * Omega;
  return make_report("ruessmann", lhs, rhs, {{"K", K}, {"Omega", Omega}});
}

} // namespace kam

#endif
