#ifndef KAM_TORUS_FIELD_HPP_
#define KAM_TORUS_FIELD_HPP_

#include <span>
#include <vector>

#include "kam/errors.hpp"
#include "kam/fourier_series.hpp"

namespace kam
{

/// n-vector of Fourier series on T^n: vector fields Q, P, Z and the
/// displacement part Phi_hat of near-identity maps Phi = I + Phi_hat.
class TorusMapField
{
public:
  TorusMapField() = default;

  explicit TorusMapField(int n) : comps_(static_cast<std::size_t>(n), FourierSeries(n))
  {
    if (n < 1 || n > kMaxDim) throw StructuralError("TorusMapField: unsupported dimension");
  }

  explicit TorusMapField(std::vector<FourierSeries> comps) : comps_(std::move(comps))
  {
    const int n = static_cast<int>(comps_.size());
    if (n < 1 || n > kMaxDim) throw StructuralError("TorusMapField: unsupported dimension");
    for (auto& c : comps_)
    {
      if (c.dim() == 0) c = FourierSeries(n);
      if (c.dim() != n) throw StructuralError("TorusMapField: component dimension mismatch");
    }
  }

  /// Constant field Z (supported on k = 0 only).
  static TorusMapField constant(std::span<const double> z)
  {
    const int n = static_cast<int>(z.size());
    TorusMapField f(n);
    for (int i = 0; i < n; ++i) f.comps_[i] = FourierSeries::constant(n, z[i]);
    return f;
  }

  int dim() const { return static_cast<int>(comps_.size()); }
  FourierSeries& operator[](int i) { return comps_[i]; }
  const FourierSeries& operator[](int i) const { return comps_[i]; }
  std::span<const FourierSeries> components() const { return comps_; }

  int order() const
  {
    int K = 0;
    for (const auto& c : comps_) K = std::max(K, c.order());
    return K;
  }

  int max_component() const
  {
    int K = 0;
    for (const auto& c : comps_) K = std::max(K, c.max_component());
    return K;
  }

  bool is_zero() const
  {
    for (const auto& c : comps_)
      if (!c.empty()) return false;
    return true;
  }

  bool is_real(double tol = 1e-12) const
  {
    for (const auto& c : comps_)
      if (!c.is_real(tol)) return false;
    return true;
  }

  /// Constant terms as a real vector (imaginary parts are discarded).
  std::vector<double> mean() const
  {
    std::vector<double> z;
    for (const auto& c : comps_) z.push_back(c.mean().real());
    return z;
  }

  /// max_i sum_k |f_{i,k}|
  double l1() const
  {
    double m = 0.0;
    for (const auto& c : comps_) m = std::max(m, c.l1());
    return m;
  }

  TorusMapField real_part() const
  {
    TorusMapField g = *this;
    for (auto& c : g.comps_) c = c.real_part();
    return g;
  }

  double prune(double rel = kPruneRelative)
  {
    double removed = 0.0;
    for (auto& c : comps_) removed += c.prune(rel);
    return removed;
  }

  TorusMapField& operator+=(const TorusMapField& g)
  {
    check(g);
    for (int i = 0; i < dim(); ++i) comps_[i] += g.comps_[i];
    return *this;
  }
  TorusMapField& operator-=(const TorusMapField& g)
  {
    check(g);
    for (int i = 0; i < dim(); ++i) comps_[i] -= g.comps_[i];
    return *this;
  }
  TorusMapField& operator*=(Complex a)
  {
    for (auto& c : comps_) c *= a;
    return *this;
  }
  friend TorusMapField operator+(TorusMapField f, const TorusMapField& g) { return f += g; }
  friend TorusMapField operator-(TorusMapField f, const TorusMapField& g) { return f -= g; }
  friend TorusMapField operator*(Complex a, TorusMapField f) { return f *= a; }

  bool operator==(const TorusMapField&) const = default;

private:
  void check(const TorusMapField& g) const
  {
    if (g.dim() != dim()) throw StructuralError("TorusMapField: dimension mismatch");
  }

  std::vector<FourierSeries> comps_;
};

/// Applies `fn` to every component.
template <class Fn>
TorusMapField map_components(const TorusMapField& f, Fn&& fn)
{
  std::vector<FourierSeries> out;
  for (const auto& c : f.components()) out.push_back(fn(c));
  return TorusMapField(std::move(out));
}

inline TorusMapField project(const TorusMapField& f, int K, Part part)
{
  return map_components(f, [&](const FourierSeries& c) { return project(c, K, part); });
}

inline TorusMapField del_omega(const TorusMapField& f, std::span<const double> omega)
{
  return map_components(f, [&](const FourierSeries& c) { return del_omega(c, omega); });
}

/// n x n matrix of Fourier series; entry (i, j) is d_j of component i when
/// built from a field.
class JacobianField
{
public:
  JacobianField() = default;

  explicit JacobianField(int n)
      : n_(n), entries_(static_cast<std::size_t>(n * n), FourierSeries(n))
  {
    if (n < 1 || n > kMaxDim) throw StructuralError("JacobianField: unsupported dimension");
  }

  static JacobianField identity(int n)
  {
    JacobianField J(n);
    for (int i = 0; i < n; ++i) J(i, i) = FourierSeries::constant(n, 1.0);
    return J;
  }

  /// Constant matrix, row-major.
  static JacobianField constant(int n, std::span<const double> m)
  {
    if (static_cast<int>(m.size()) != n * n) throw StructuralError("JacobianField::constant: size mismatch");
    JacobianField J(n);
    for (int i = 0; i < n * n; ++i) J.entries_[i] = FourierSeries::constant(n, m[i]);
    return J;
  }

  int dim() const { return n_; }
  FourierSeries& operator()(int i, int j) { return entries_[i * n_ + j]; }
  const FourierSeries& operator()(int i, int j) const { return entries_[i * n_ + j]; }

  int order() const
  {
    int K = 0;
    for (const auto& e : entries_) K = std::max(K, e.order());
    return K;
  }

  int max_component() const
  {
    int K = 0;
    for (const auto& e : entries_) K = std::max(K, e.max_component());
    return K;
  }

  bool is_zero() const
  {
    for (const auto& e : entries_)
      if (!e.empty()) return false;
    return true;
  }

  JacobianField& operator+=(const JacobianField& B)
  {
    check(B);
    for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] += B.entries_[i];
    return *this;
  }
  JacobianField& operator-=(const JacobianField& B)
  {
    check(B);
    for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] -= B.entries_[i];
    return *this;
  }
  JacobianField& operator*=(Complex a)
  {
    for (auto& e : entries_) e *= a;
    return *this;
  }
  friend JacobianField operator+(JacobianField A, const JacobianField& B) { return A += B; }
  friend JacobianField operator-(JacobianField A, const JacobianField& B) { return A -= B; }
  friend JacobianField operator*(Complex a, JacobianField A) { return A *= a; }

  /// A * z for a constant vector z.
  TorusMapField apply(std::span<const double> z) const
  {
    if (static_cast<int>(z.size()) != n_) throw StructuralError("JacobianField::apply: size mismatch");
    TorusMapField out(n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        if (z[j] != 0.0) out[i] += z[j] * (*this)(i, j);
    return out;
  }

  double prune(double rel = kPruneRelative)
  {
    double removed = 0.0;
    for (auto& e : entries_) removed += e.prune(rel);
    return removed;
  }

  JacobianField real_part() const
  {
    JacobianField J = *this;
    for (auto& e : J.entries_) e = e.real_part();
    return J;
  }

private:
  void check(const JacobianField& B) const
  {
    if (B.n_ != n_) throw StructuralError("JacobianField: dimension mismatch");
  }

  int n_ = 0;
  std::vector<FourierSeries> entries_;
};

/// D Phi_hat: entry (i, j) = d_j Phi_hat_i.
inline JacobianField derivative(const TorusMapField& f)
{
  const int n = f.dim();
  JacobianField J(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) J(i, j) = derivative_along(f[i], j);
  return J;
}

/// D(I + Phi_hat) = Id + D Phi_hat.
inline JacobianField jacobian_of_map(const TorusMapField& phi_hat)
{
  return JacobianField::identity(phi_hat.dim()) + derivative(phi_hat);
}

} // namespace kam

#endif
