#ifndef KAM_FOURIER_SERIES_HPP_
#define KAM_FOURIER_SERIES_HPP_

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "kam/divisor.hpp"
#include "kam/errors.hpp"
#include "kam/multi_index.hpp"

namespace kam
{

using Complex = std::complex<double>;

/// Relative pruning threshold for stored coefficients.
inline constexpr double kPruneRelative = 1e-16;

/// Finitely supported Fourier series f = sum_k f_k e^{i<k,x>} on T^n.
///
/// Coefficients live in a vector sorted by multi-index with no duplicates
/// and no exact zeros. Values are immutable in spirit: every operation
/// returns a new series.
class FourierSeries
{
public:
  using Term = std::pair<MultiIndex, Complex>;

  FourierSeries() = default;

  explicit FourierSeries(int n) : n_(n)
  {
    if (n < 1 || n > kMaxDim) throw StructuralError("FourierSeries: unsupported dimension");
  }

  static FourierSeries constant(int n, Complex c)
  {
    FourierSeries f(n);
    if (c != Complex(0.0)) f.terms_.emplace_back(MultiIndex(n), c);
    return f;
  }

  static FourierSeries mode(const MultiIndex& k, Complex c = 1.0)
  {
    FourierSeries f(k.dim());
    if (c != Complex(0.0)) f.terms_.emplace_back(k, c);
    return f;
  }

  /// Builds a series from unordered terms. Duplicates are summed unless
  /// `reject_duplicates` is set, in which case they raise.
  static FourierSeries from_terms(int n, std::vector<Term> terms, bool reject_duplicates = false)
  {
    FourierSeries f(n);
    for (const auto& t : terms)
      if (t.first.dim() != n) throw StructuralError("FourierSeries: term dimension mismatch");
    const auto less = [](const Term& a, const Term& b) { return a.first < b.first; };
    if (!std::is_sorted(terms.begin(), terms.end(), less)) std::sort(terms.begin(), terms.end(), less);
    for (auto& t : terms)
    {
      if (!f.terms_.empty() && f.terms_.back().first == t.first)
      {
        if (reject_duplicates)
          throw ConfigurationError("FourierSeries: duplicate multi-index " + t.first.str());
        f.terms_.back().second += t.second;
      }
      else
      {
        f.terms_.push_back(t);
      }
    }
    f.drop_zeros();
    return f;
  }

  /// Adopts terms that are already sorted and unique.
  static FourierSeries from_sorted(int n, std::vector<Term> terms)
  {
    FourierSeries f(n);
    f.terms_ = std::move(terms);
    f.drop_zeros();
    return f;
  }

  int dim() const { return n_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }
  std::span<const Term> terms() const { return terms_; }

  /// max |k| over stored coefficients (0 for the empty series).
  int order() const
  {
    int K = 0;
    for (const auto& t : terms_) K = std::max(K, t.first.order());
    return K;
  }

  int max_component() const
  {
    int K = 0;
    for (const auto& t : terms_) K = std::max(K, t.first.max_component());
    return K;
  }

  Complex operator[](const MultiIndex& k) const
  {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), k,
                               [](const Term& t, const MultiIndex& key) { return t.first < key; });
    if (it != terms_.end() && it->first == k) return it->second;
    return 0.0;
  }

  Complex mean() const { return (*this)[MultiIndex(n_)]; }

  double max_abs() const
  {
    double m = 0.0;
    for (const auto& t : terms_) m = std::max(m, std::abs(t.second));
    return m;
  }

  /// sum |f_k|, i.e. the sup-norm bound on the real torus.
  double l1() const
  {
    double s = 0.0;
    for (const auto& t : terms_) s += std::abs(t.second);
    return s;
  }

  /// Reality check: f_{-k} == conj(f_k) up to `tol` times the largest coefficient.
  bool is_real(double tol = 1e-12) const
  {
    const double scale = std::max(max_abs(), std::numeric_limits<double>::min());
    for (const auto& [k, c] : terms_)
      if (std::abs((*this)[-k] - std::conj(c)) > tol * scale) return false;
    return true;
  }

  /// Point evaluation by direct summation.
  Complex evaluate(std::span<const double> x) const
  {
    if (static_cast<int>(x.size()) != n_) throw StructuralError("evaluate: point dimension mismatch");
    Complex acc = 0.0;
    for (const auto& [k, c] : terms_)
    {
      double phase = 0.0;
      for (int i = 0; i < n_; ++i) phase += k[i] * x[i];
      acc += c * std::polar(1.0, phase);
    }
    return acc;
  }

  FourierSeries& operator+=(const FourierSeries& g) { return *this = merge(*this, g, 1.0); }
  FourierSeries& operator-=(const FourierSeries& g) { return *this = merge(*this, g, -1.0); }
  FourierSeries& operator*=(Complex a)
  {
    if (a == Complex(0.0))
    {
      terms_.clear();
      return *this;
    }
    for (auto& t : terms_) t.second *= a;
    return *this;
  }

  friend FourierSeries operator+(const FourierSeries& f, const FourierSeries& g) { return merge(f, g, 1.0); }
  friend FourierSeries operator-(const FourierSeries& f, const FourierSeries& g) { return merge(f, g, -1.0); }
  friend FourierSeries operator-(FourierSeries f) { return f *= -1.0; }
  friend FourierSeries operator*(Complex a, FourierSeries f) { return f *= a; }
  friend FourierSeries operator*(FourierSeries f, Complex a) { return f *= a; }

  /// Drops coefficients with |c| <= rel * max|c|. Returns the l1 mass removed.
  double prune(double rel = kPruneRelative)
  {
    const double cut = rel * max_abs();
    double removed = 0.0;
    std::erase_if(terms_, [&](const Term& t) {
      const double a = std::abs(t.second);
      if (a <= cut)
      {
        removed += a;
        return true;
      }
      return false;
    });
    return removed;
  }

  /// Symmetrizes to the nearest real-valued series, (f + conj(f(-.)))/2.
  FourierSeries real_part() const
  {
    // k -> -k reverses the lexicographic order, so the reflection stays sorted
    FourierSeries r(n_);
    r.terms_.reserve(terms_.size());
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) r.terms_.emplace_back(-it->first, std::conj(it->second));
    FourierSeries out = merge(*this, r, 1.0);
    for (auto& t : out.terms_) t.second *= 0.5;
    return out;
  }

  bool operator==(const FourierSeries&) const = default;

private:
  static FourierSeries merge(const FourierSeries& f, const FourierSeries& g, double sign)
  {
    if (f.n_ == 0) return sign > 0 ? g : -g;
    if (g.n_ == 0) return f;
    if (f.n_ != g.n_) throw StructuralError("FourierSeries: dimension mismatch");
    FourierSeries h(f.n_);
    h.terms_.reserve(f.terms_.size() + g.terms_.size());
    auto a = f.terms_.begin();
    auto b = g.terms_.begin();
    while (a != f.terms_.end() || b != g.terms_.end())
    {
      if (b == g.terms_.end() || (a != f.terms_.end() && a->first < b->first))
        h.terms_.push_back(*a++);
      else if (a == f.terms_.end() || b->first < a->first)
      {
        h.terms_.emplace_back(b->first, sign * b->second);
        ++b;
      }
      else
      {
        const Complex v = a->second + sign * b->second;
        if (v != Complex(0.0)) h.terms_.emplace_back(a->first, v);
        ++a;
        ++b;
      }
    }
    return h;
  }

  void drop_zeros()
  {
    std::erase_if(terms_, [](const Term& t) { return t.second == Complex(0.0); });
  }

  int n_ = 0;
  std::vector<Term> terms_;
};

/// Which part of a series `project` keeps.
enum class Part
{
  full_Pi,         ///< |k| <= K
  mean_Pr0,        ///< k == 0
  nonconstant_Pr1, ///< 0 < |k| <= K
  tail_I_minus_Pi, ///< |k| > K
};

inline FourierSeries project(const FourierSeries& f, int K, Part part)
{
  if (K < 0) throw PreconditionError("project: K must be nonnegative");
  std::vector<FourierSeries::Term> out;
  for (const auto& t : f.terms())
  {
    const int o = t.first.order();
    bool keep = false;
    switch (part)
    {
    case Part::full_Pi: keep = o <= K; break;
    case Part::mean_Pr0: keep = o == 0; break;
    case Part::nonconstant_Pr1: keep = o > 0 && o <= K; break;
    case Part::tail_I_minus_Pi: keep = o > K; break;
    }
    if (keep) out.push_back(t);
  }
  return FourierSeries::from_sorted(f.dim(), std::move(out));
}

/// Keeps modes with lo < |k| <= hi.
inline FourierSeries project_shell(const FourierSeries& f, int lo, int hi)
{
  std::vector<FourierSeries::Term> out;
  for (const auto& t : f.terms())
  {
    const int o = t.first.order();
    if (o > lo && o <= hi) out.push_back(t);
  }
  return FourierSeries::from_sorted(f.dim(), std::move(out));
}

/// d/dx_j: f_k -> i k_j f_k.
inline FourierSeries derivative_along(const FourierSeries& f, int j)
{
  if (j < 0 || j >= f.dim()) throw StructuralError("derivative_along: direction out of range");
  std::vector<FourierSeries::Term> out;
  out.reserve(f.size());
  for (const auto& [k, c] : f.terms())
    if (k[j] != 0) out.emplace_back(k, Complex(0.0, k[j]) * c);
  return FourierSeries::from_sorted(f.dim(), std::move(out));
}

/// d_omega f = sum_j omega_j d_j f: f_k -> i<k,omega> f_k.
inline FourierSeries del_omega(const FourierSeries& f, std::span<const double> omega)
{
  if (static_cast<int>(omega.size()) != f.dim()) throw StructuralError("del_omega: omega dimension mismatch");
  std::vector<FourierSeries::Term> out;
  out.reserve(f.size());
  for (const auto& [k, c] : f.terms())
  {
    if (k.is_zero()) continue;
    out.emplace_back(k, Complex(0.0, divisor(k, omega)) * c);
  }
  return FourierSeries::from_sorted(f.dim(), std::move(out));
}

/// Evaluates several series at many points by direct trigonometric summation.
///
/// `points` is row-major (count x n). Per point, the characters e^{i m x_j}
/// are tabulated once per dimension so each term costs n complex products.
inline std::vector<std::vector<Complex>> evaluate_many(std::span<const FourierSeries> fs,
                                                       std::span<const double> points, int n)
{
  const std::size_t count = points.size() / static_cast<std::size_t>(n);
  int M = 0;
  for (const auto& f : fs)
  {
    if (f.dim() != n && f.dim() != 0) throw StructuralError("evaluate_many: dimension mismatch");
    M = std::max(M, f.max_component());
  }
  std::vector<std::vector<Complex>> out(fs.size(), std::vector<Complex>(count));
  const int width = 2 * M + 1;
  std::vector<Complex> table(static_cast<std::size_t>(n) * width);
  for (std::size_t p = 0; p < count; ++p)
  {
    for (int j = 0; j < n; ++j)
    {
      const double x = points[p * n + j];
      for (int m = -M; m <= M; ++m) table[j * width + (m + M)] = std::polar(1.0, m * x);
    }
    for (std::size_t q = 0; q < fs.size(); ++q)
    {
      Complex acc = 0.0;
      for (const auto& [k, c] : fs[q].terms())
      {
        Complex e = table[k[0] + M];
        for (int j = 1; j < n; ++j) e *= table[j * width + (k[j] + M)];
        acc += c * e;
      }
      out[q][p] = acc;
    }
  }
  return out;
}

} // namespace kam

#endif
