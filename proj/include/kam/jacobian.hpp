#ifndef KAM_JACOBIAN_HPP_
#define KAM_JACOBIAN_HPP_

#include <array>
#include <cmath>
#include <vector>

#include "kam/compose.hpp"
#include "kam/multiply.hpp"
#include "kam/norms.hpp"

namespace kam
{

struct NeumannResult
{
  JacobianField deviation; ///< B with (Id + A)^{-1} = Id + B
  double mu = 0.0;         ///< ||A||_s
  int terms = 0;
  double dropped_mass = 0.0;
};

/// (Id + A)^{-1} - Id = sum_{m>=1} (-A)^m, truncated once a term's
/// ||.||_s norm falls below `tol`. Requires mu = ||A||_s < 1.
inline NeumannResult invert_near_identity(const JacobianField& A, double s, double tol, int K_cap,
                                          int max_terms = 400)
{
  NeumannResult res;
  res.mu = norm_exp(A, s);
  if (!(res.mu < 1.0))
    throw NonInvertibleError("invert_jacobian: |D - Id|_s = " + std::to_string(res.mu) + " >= 1", res.mu);
  const int n = A.dim();
  res.deviation = JacobianField(n);
  if (A.is_zero()) return res;
  const JacobianField minusA = -1.0 * A;
  JacobianField term = minusA;
  for (int m = 1; m <= max_terms; ++m)
  {
    res.deviation += term;
    res.terms = m;
    term = multiply(term, minusA, K_cap, &res.dropped_mass);
    if (norm_exp(term, s) < tol) break;
  }
  return res;
}

/// Neumann inverse of a Jacobian D with |D - Id|_s < 1.
inline JacobianField invert_jacobian(const JacobianField& D, double s, double tol, int K_cap)
{
  const JacobianField A = D - JacobianField::identity(D.dim());
  return JacobianField::identity(D.dim()) + invert_near_identity(A, s, tol, K_cap).deviation;
}

/// Near-identity map Psi = I + hat with cached D hat and the Neumann data of D Psi^{-1}.
struct NearIdentityTransform
{
  TorusMapField hat;
  JacobianField dhat;    ///< A = D hat
  JacobianField inv_dev; ///< B, D Psi^{-1} = Id + B
  double mu = 0.0;       ///< ||A||_s at the width used to build it

  /// Theta = D Psi^{-1} (D Psi - Id) = -B.
  JacobianField theta() const { return -1.0 * inv_dev; }
};

inline NearIdentityTransform make_transform(TorusMapField hat, double s, int K_cap, double tol = 0.0)
{
  NearIdentityTransform t;
  t.dhat = derivative(hat);
  t.hat = std::move(hat);
  const double mu = norm_exp(t.dhat, s);
  auto inv = invert_near_identity(t.dhat, s, tol > 0.0 ? tol : 1e-17 * std::max(mu, 1e-300), K_cap);
  t.inv_dev = inv.deviation.real_part();
  t.mu = inv.mu;
  return t;
}

inline NearIdentityTransform identity_transform(int n)
{
  NearIdentityTransform t;
  t.hat = TorusMapField(n);
  t.dhat = JacobianField(n);
  t.inv_dev = JacobianField(n);
  return t;
}

/// Psi^* Z = D Psi^{-1} Z = Z - Theta Z for a constant field Z.
inline TorusMapField pullback_constant(std::span<const double> Z, const NearIdentityTransform& psi)
{
  TorusMapField out = TorusMapField::constant(Z);
  out += psi.inv_dev.apply(Z);
  return out;
}

namespace detail
{
// Solves M y = b in place by Gaussian elimination with partial pivoting.
inline bool solve_small(int n, std::array<Complex, kMaxDim * kMaxDim>& M, std::array<Complex, kMaxDim>& b)
{
  for (int c = 0; c < n; ++c)
  {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(M[r * n + c]) > std::abs(M[piv * n + c])) piv = r;
    if (std::abs(M[piv * n + c]) == 0.0) return false;
    if (piv != c)
    {
      for (int j = 0; j < n; ++j) std::swap(M[c * n + j], M[piv * n + j]);
      std::swap(b[c], b[piv]);
    }
    for (int r = c + 1; r < n; ++r)
    {
      const Complex f = M[r * n + c] / M[c * n + c];
      for (int j = c; j < n; ++j) M[r * n + j] -= f * M[c * n + j];
      b[r] -= f * b[c];
    }
  }
  for (int c = n - 1; c >= 0; --c)
  {
    for (int j = c + 1; j < n; ++j) b[c] -= M[c * n + j] * b[j];
    b[c] /= M[c * n + c];
  }
  return true;
}
} // namespace detail

struct SolveReport
{
  int grid_points = 0;
  double dropped_mass = 0.0;
};

/// (Id + A)^{-1} v, solved pointwise with partial pivoting on a uniform grid.
///
/// Only the correction (Id + A)^{-1} A v passes through the grid; v itself is
/// kept exactly. The grid has at least `grid_factor (K_out + 1)` points per
/// dimension and resolves the Neumann spread of the correction.
inline TorusMapField solve_near_identity(const JacobianField& A, const TorusMapField& v, int K_out,
                                         int grid_factor = 4, SolveReport* report = nullptr)
{
  const int n = A.dim();
  if (v.dim() != n) throw StructuralError("solve_near_identity: dimension mismatch");
  SolveReport rep;
  TorusMapField out = project(v, K_out, Part::full_Pi);
  rep.dropped_mass += project(v, K_out, Part::tail_I_minus_Pi).l1();
  if (A.is_zero() || v.is_zero())
  {
    if (report) *report = rep;
    return out;
  }
  double mu0 = 0.0;
  for (int i = 0; i < n; ++i)
  {
    double row = 0.0;
    for (int j = 0; j < n; ++j) row += A(i, j).l1();
    mu0 = std::max(mu0, row);
  }
  if (!(mu0 < 1.0)) throw NonInvertibleError("solve_near_identity: sup |D Phi_hat| >= 1", mu0);
  int M = 1;
  for (double t = mu0 * mu0; t > 1e-17 && M < 60; t *= mu0) ++M;
  const int K_spec = v.order() + M * A.order();
  const int K_keep = std::min(K_out, K_spec);
  const int N = good_fft_size(std::max(grid_factor * (K_keep + 1), K_keep + K_spec + 1));
  rep.grid_points = N;

  TorusGrid grid(n, N);
  const std::size_t G = grid.size();
  std::vector<std::vector<Complex>> a(static_cast<std::size_t>(n * n)), vv(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[i * n + j] = grid.synthesize(A(i, j));
  for (int i = 0; i < n; ++i) vv[i] = grid.synthesize(v[i]);

  std::vector<std::vector<Complex>> corr(n, std::vector<Complex>(G));
  std::array<Complex, kMaxDim * kMaxDim> Mx{};
  std::array<Complex, kMaxDim> b{};
  for (std::size_t p = 0; p < G; ++p)
  {
    for (int i = 0; i < n; ++i)
    {
      Complex acc = 0.0;
      for (int j = 0; j < n; ++j)
      {
        const Complex aij = a[i * n + j][p];
        Mx[i * n + j] = aij + (i == j ? 1.0 : 0.0);
        acc += aij * vv[j][p];
      }
      b[i] = acc;
    }
    if (!detail::solve_small(n, Mx, b)) throw NonInvertibleError("solve_near_identity: singular Jacobian on grid", mu0);
    for (int i = 0; i < n; ++i) corr[i][p] = b[i];
  }
  bool real = v.is_real();
  for (int i = 0; i < n && real; ++i)
    for (int j = 0; j < n && real; ++j) real = A(i, j).is_real();
  for (int i = 0; i < n; ++i)
  {
    auto c = grid.analyze(std::span<const Complex>(corr[i]), K_out, &rep.dropped_mass);
    out[i] -= real ? c.real_part() : c;
  }
  if (report) *report = rep;
  return out;
}

/// Psi^* X = D Psi^{-1} (X o Psi).
inline TorusMapField pullback(const TorusMapField& X, const NearIdentityTransform& psi, int K_out,
                              const ComposeOptions& copt = {}, double* dropped = nullptr)
{
  ComposeOptions o = copt;
  o.output_order = K_out;
  ComposeReport crep;
  const TorusMapField composed = compose(X, psi.hat, o, &crep);
  SolveReport srep;
  TorusMapField out = solve_near_identity(psi.dhat, composed, K_out, 4, &srep);
  if (dropped) *dropped += crep.dropped_mass + srep.dropped_mass;
  return out;
}

} // namespace kam

#endif
