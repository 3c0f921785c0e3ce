#ifndef KAM_DIVISOR_HPP_
#define KAM_DIVISOR_HPP_

#include <cmath>
#include <span>

#include "kam/errors.hpp"
#include "kam/multi_index.hpp"

namespace kam
{

namespace detail
{
// Error-free transformations (Knuth TwoSum, fma-based TwoProduct).
inline void two_sum(double a, double b, double& s, double& e)
{
  s = a + b;
  const double bb = s - a;
  e = (a - (s - bb)) + (b - bb);
}

inline void two_prod(double a, double b, double& p, double& e)
{
  p = a * b;
  e = std::fma(a, b, -p);
}
} // namespace detail

/// <k, omega> evaluated with compensated (Dot2) summation.
///
/// The result is as accurate as if computed in twice the working precision
/// and then rounded, which matters for near-resonant k.
inline double divisor(const MultiIndex& k, std::span<const double> omega)
{
  if (static_cast<int>(omega.size()) != k.dim())
    throw StructuralError("divisor: omega has wrong dimension");
  double s = 0.0, c = 0.0;
  for (int i = 0; i < k.dim(); ++i)
  {
    double p, ep, t, es;
    detail::two_prod(static_cast<double>(k[i]), omega[i], p, ep);
    detail::two_sum(s, p, t, es);
    s = t;
    c += ep + es;
  }
  return s + c;
}

} // namespace kam

#endif
