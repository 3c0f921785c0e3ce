#ifndef KAM_NORMS_HPP_
#define KAM_NORMS_HPP_

#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "kam/multiply.hpp"
#include "kam/torus_field.hpp"

namespace kam
{

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// exp overflows past this argument
inline constexpr double kMaxExpArg = 709.0;

/// Both sides of an inequality lhs <= rhs, with the parameters it was evaluated at.
struct BoundReport
{
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  std::vector<std::pair<std::string, double>> params;

  bool holds(double tol = 1e-9) const { return ratio <= 1.0 + tol; }
};

inline double bound_ratio(double lhs, double rhs)
{
  if (lhs == 0.0) return 0.0;
  if (rhs == 0.0) return kInf;
  if (std::isinf(rhs) && !std::isinf(lhs)) return 0.0;
  return lhs / rhs;
}

inline BoundReport make_report(std::string name, double lhs, double rhs,
                               std::vector<std::pair<std::string, double>> params = {})
{
  return BoundReport{std::move(name), lhs, rhs, bound_ratio(lhs, rhs), std::move(params)};
}

/// sinh(x)/x with the value 1 at x = 0.
inline double sinhc(double x)
{
  x = std::abs(x);
  if (x < 1e-4)
  {
    const double x2 = x * x;
    return 1.0 + x2 / 6.0 + x2 * x2 / 120.0;
  }
  if (x > kMaxExpArg) return kInf;
  return std::sinh(x) / x;
}

/// w_k(t) = prod_i sinh(t k_i)/(t k_i).
inline double weight(const MultiIndex& k, double t)
{
  if (t < 0.0) throw PreconditionError("weight: t must be nonnegative");
  double w = 1.0;
  for (int i = 0; i < k.dim(); ++i) w *= sinhc(t * k[i]);
  return w;
}

/// Cached w_k(t) for a fixed t.
class WeightTable
{
public:
  explicit WeightTable(double t) : t_(t)
  {
    if (t < 0.0) throw PreconditionError("WeightTable: t must be nonnegative");
  }
  double t() const { return t_; }
  double operator()(const MultiIndex& k)
  {
    auto it = cache_.find(k);
    if (it != cache_.end()) return it->second;
    const double w = weight(k, t_);
    cache_.emplace(k, w);
    return w;
  }

private:
  double t_;
  std::map<MultiIndex, double> cache_;
};

inline double exp_weight(int order, double s)
{
  const double a = s * order;
  return a > kMaxExpArg ? kInf : std::exp(a);
}

/// ||f||_s = sum_k |f_k| e^{s|k|}.
inline double norm_exp(const FourierSeries& f, double s)
{
  if (s < 0.0) throw PreconditionError("norm_exp: s must be nonnegative");
  double acc = 0.0;
  for (const auto& [k, c] : f.terms()) acc += std::abs(c) * exp_weight(k.order(), s);
  return acc;
}

/// |||f|||_s = (sum_k |f_k|^2 w_k(2s))^{1/2}, the mean L2 norm over the strip |Im z| <= s.
inline double norm_mean_l2(const FourierSeries& f, double s)
{
  if (s < 0.0) throw PreconditionError("norm_mean_l2: s must be nonnegative");
  double acc = 0.0;
  for (const auto& [k, c] : f.terms())
  {
    const double a = std::abs(c);
    acc += a * a * weight(k, 2.0 * s);
  }
  return std::sqrt(acc);
}

// Field norms take the maximum over components.
inline double norm_exp(const TorusMapField& f, double s)
{
  double m = 0.0;
  for (const auto& c : f.components()) m = std::max(m, norm_exp(c, s));
  return m;
}

inline double norm_mean_l2(const TorusMapField& f, double s)
{
  double m = 0.0;
  for (const auto& c : f.components()) m = std::max(m, norm_mean_l2(c, s));
  return m;
}

/// max_i |z_i|; all norms agree on constants.
inline double norm_const(std::span<const double> z)
{
  double m = 0.0;
  for (double v : z) m = std::max(m, std::abs(v));
  return m;
}

/// Induced row-sum norm: max_i sum_j ||A_ij||_s.
inline double norm_exp(const JacobianField& A, double s)
{
  double m = 0.0;
  for (int i = 0; i < A.dim(); ++i)
  {
    double row = 0.0;
    for (int j = 0; j < A.dim(); ++j) row += norm_exp(A(i, j), s);
    m = std::max(m, row);
  }
  return m;
}

/// ||Id + A||_s without forming Id + A.
inline double norm_exp_identity_plus(const JacobianField& A, double s)
{
  double m = 0.0;
  for (int i = 0; i < A.dim(); ++i)
  {
    double row = 0.0;
    for (int j = 0; j < A.dim(); ++j)
    {
      double e = norm_exp(A(i, j), s);
      if (i == j)
      {
        const Complex a0 = A(i, j).mean();
        e += std::abs(1.0 + a0) - std::abs(a0);
      }
      row += e;
    }
    m = std::max(m, row);
  }
  return m;
}

/// Block base of the interpolating norms: b = 1 (weighted l1), finite b >= 2,
/// or b = infinity (weighted l2).
struct BlockBase
{
  enum class Kind
  {
    one,
    finite,
    infinity
  };
  Kind kind = Kind::finite;
  long b = 2;

  static BlockBase one() { return {Kind::one, 1}; }
  static BlockBase infinity() { return {Kind::infinity, 0}; }
  static BlockBase of(long b)
  {
    if (b == 1) return one();
    if (b < 2) throw PreconditionError("BlockBase: b must be >= 1");
    return {Kind::finite, b};
  }
};

/// Index nu >= 0 of the block b^{nu-1} < |k| <= b^nu containing order |k| >= 1.
inline int block_index(long order, long b)
{
  int nu = 0;
  long top = 1;
  while (order > top)
  {
    top *= b;
    ++nu;
  }
  return nu;
}

/// ||P||_{r,b} = sum_nu (sum_{b^{nu-1} < |k| <= b^nu} |p_k|^2 |k|^{2r})^{1/2}.
inline double norm_block(const FourierSeries& P, double r, BlockBase base)
{
  if (std::abs(P.mean()) != 0.0) throw PreconditionError("norm_block: perturbation must have zero mean");
  if (base.kind == BlockBase::Kind::one)
  {
    double acc = 0.0;
    for (const auto& [k, c] : P.terms()) acc += std::abs(c) * std::pow(k.order(), r);
    return acc;
  }
  if (base.kind == BlockBase::Kind::infinity)
  {
    double acc = 0.0;
    for (const auto& [k, c] : P.terms())
    {
      const double a = std::abs(c) * std::pow(k.order(), r);
      acc += a * a;
    }
    return std::sqrt(acc);
  }
  std::map<int, double> blocks;
  for (const auto& [k, c] : P.terms())
  {
    const double a = std::abs(c) * std::pow(k.order(), r);
    blocks[block_index(k.order(), base.b)] += a * a;
  }
  double acc = 0.0;
  for (const auto& [nu, e] : blocks) acc += std::sqrt(e);
  return acc;
}

inline double norm_block(const TorusMapField& P, double r, BlockBase base)
{
  double m = 0.0;
  for (const auto& c : P.components()) m = std::max(m, norm_block(c, r, base));
  return m;
}

/// m_k = |k|^exponent, the weight family used by the iteration.
struct PowerWeight
{
  double exponent = 2.0;
  double operator()(const MultiIndex& k) const { return std::pow(k.order(), exponent); }
};

/// ||P||_m = (sum |p_k|^2 m_k^2)^{1/2}.
inline double norm_m(const FourierSeries& P, const PowerWeight& m)
{
  double acc = 0.0;
  for (const auto& [k, c] : P.terms())
  {
    const double a = std::abs(c) * m(k);
    acc += a * a;
  }
  return std::sqrt(acc);
}

/// Table-driven variant; every stored index needs a weight.
inline double norm_m(const FourierSeries& P, const std::map<MultiIndex, double>& m)
{
  double acc = 0.0;
  for (const auto& [k, c] : P.terms())
  {
    auto it = m.find(k);
    if (it == m.end()) throw ConfigurationError("norm_m: no weight for index " + k.str());
    if (!(it->second > 0.0)) throw PreconditionError("norm_m: weights must be positive");
    const double a = std::abs(c) * it->second;
    acc += a * a;
  }
  return std::sqrt(acc);
}

template <class W>
double norm_m(const TorusMapField& P, const W& m)
{
  double best = 0.0;
  for (const auto& c : P.components()) best = std::max(best, norm_m(c, m));
  return best;
}

/// |||dP|||_s <= (e^r / m_nu) ||dP||_m for a block supported on s|k| <= r.
inline BoundReport delta_p_bound_check(const TorusMapField& dP, double s, double m_nu, double r,
                                       const PowerWeight& m)
{
  const double lhs = norm_mean_l2(dP, s);
  const double rhs = std::exp(r) / m_nu * norm_m(dP, m);
  return make_report("delta_p", lhs, rhs, {{"s", s}, {"m_nu", m_nu}, {"r", r}});
}

/// sum_l max_j |phi_{j,l}| e^{s|l|}: the norm of a map paired with |k|_1 in <k, phi>.
inline double norm_exp_dual(const TorusMapField& phi, double s)
{
  std::map<MultiIndex, double> best;
  for (const auto& c : phi.components())
    for (const auto& [l, v] : c.terms())
    {
      double& b = best[l];
      b = std::max(b, std::abs(v));
    }
  double acc = 0.0;
  for (const auto& [l, v] : best) acc += v * exp_weight(l.order(), s);
  return acc;
}

/// Df . phi = sum_j d_j f phi_j, as an exact (untruncated) product.
inline FourierSeries directional_derivative(const FourierSeries& f, const TorusMapField& phi)
{
  if (f.dim() != phi.dim()) throw StructuralError("directional_derivative: dimension mismatch");
  const int cap = f.order() + phi.order();
  FourierSeries out(f.dim());
  for (int j = 0; j < f.dim(); ++j) out += multiply(derivative_along(f, j), phi[j], cap);
  return out;
}

/// |||Df.phi|||_{alpha s} <= 1/(e alpha^{n/2}) 1/((1-alpha)s) |||f|||_s ||phi||_s.
inline BoundReport cauchy_bound_check(const FourierSeries& f, const TorusMapField& phi, double s,
                                      double alpha)
{
  if (!(alpha > 0.0 && alpha < 1.0)) throw PreconditionError("cauchy_bound_check: need 0 < alpha < 1");
  if (!(s > 0.0)) throw PreconditionError("cauchy_bound_check: need s > 0");
  const int n = f.dim();
  const double lhs = norm_mean_l2(directional_derivative(f, phi), alpha * s);
  const double c = 1.0 / (std::numbers::e * std::pow(alpha, 0.5 * n)) / ((1.0 - alpha) * s);
  const double rhs = c * norm_mean_l2(f, s) * norm_exp_dual(phi, s);
  return make_report("cauchy", lhs, rhs, {{"s", s}, {"alpha", alpha}});
}

/// w_k(s) <= w_{k-l}(s) e^{s|l|}
inline BoundReport weight_submultiplicative_check(const MultiIndex& k, const MultiIndex& l, double s)
{
  return make_report("wkl", weight(k, s), weight(k - l, s) * exp_weight(l.order(), s), {{"s", s}});
}

/// w_k(s)/w_k(t) <= (t/s)^n e^{(s-t)|k|} for 0 < s <= t.
inline BoundReport weight_ratio_check(const MultiIndex& k, double s, double t)
{
  if (!(s > 0.0 && s <= t)) throw PreconditionError("weight_ratio_check: need 0 < s <= t");
  const double lhs = weight(k, s) / weight(k, t);
  const double rhs = std::pow(t / s, k.dim()) * std::exp((s - t) * k.order());
  return make_report("ww", lhs, rhs, {{"s", s}, {"t", t}});
}

} // namespace kam

#endif
