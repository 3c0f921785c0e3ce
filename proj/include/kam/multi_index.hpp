#ifndef KAM_MULTI_INDEX_HPP_
#define KAM_MULTI_INDEX_HPP_

#include <array>
#include <compare>
#include <cstdlib>
#include <initializer_list>
#include <span>
#include <string>

#include "kam/errors.hpp"

namespace kam
{

inline constexpr int kMaxDim = 4;

/// Integer frequency vector k in Z^n, n <= kMaxDim.
///
/// Ordering is lexicographic after the dimension, which is what the sorted
/// coefficient storage of FourierSeries relies on.
class MultiIndex
{
public:
  MultiIndex() = default;

  explicit MultiIndex(int n) : n_(n)
  {
    if (n < 1 || n > kMaxDim)
      throw StructuralError("MultiIndex: dimension must be in [1, " + std::to_string(kMaxDim) + "]");
  }

  MultiIndex(std::initializer_list<int> k) : MultiIndex(static_cast<int>(k.size()))
  {
    int i = 0;
    for (int v : k) k_[i++] = v;
  }

  static MultiIndex from(std::span<const int> k)
  {
    MultiIndex m(static_cast<int>(k.size()));
    for (std::size_t i = 0; i < k.size(); ++i) m.k_[i] = k[i];
    return m;
  }

  static MultiIndex unit(int n, int j)
  {
    MultiIndex m(n);
    m.k_[j] = 1;
    return m;
  }

  int dim() const { return n_; }
  int operator[](int i) const { return k_[i]; }
  int& operator[](int i) { return k_[i]; }

  /// l1 order |k| = sum |k_i|.
  int order() const
  {
    int s = 0;
    for (int i = 0; i < n_; ++i) s += std::abs(k_[i]);
    return s;
  }

  /// max_i |k_i|
  int max_component() const
  {
    int s = 0;
    for (int i = 0; i < n_; ++i) s = std::max(s, std::abs(k_[i]));
    return s;
  }

  bool is_zero() const
  {
    for (int i = 0; i < n_; ++i)
      if (k_[i] != 0) return false;
    return true;
  }

  MultiIndex operator-() const
  {
    MultiIndex m = *this;
    for (int i = 0; i < n_; ++i) m.k_[i] = -m.k_[i];
    return m;
  }

  friend MultiIndex operator+(MultiIndex a, const MultiIndex& b)
  {
    check_same(a, b);
    for (int i = 0; i < a.n_; ++i) a.k_[i] += b.k_[i];
    return a;
  }

  friend MultiIndex operator-(MultiIndex a, const MultiIndex& b)
  {
    check_same(a, b);
    for (int i = 0; i < a.n_; ++i) a.k_[i] -= b.k_[i];
    return a;
  }

  /// True for exactly one of k, -k when k != 0 (first nonzero entry positive).
  bool is_positive_half() const
  {
    for (int i = 0; i < n_; ++i)
    {
      if (k_[i] > 0) return true;
      if (k_[i] < 0) return false;
    }
    return false;
  }

  std::string str() const
  {
    std::string s = "(";
    for (int i = 0; i < n_; ++i)
    {
      if (i) s += ",";
      s += std::to_string(k_[i]);
    }
    return s + ")";
  }

  auto operator<=>(const MultiIndex&) const = default;
  bool operator==(const MultiIndex&) const = default;

private:
  static void check_same(const MultiIndex& a, const MultiIndex& b)
  {
    if (a.n_ != b.n_) throw StructuralError("MultiIndex: dimension mismatch");
  }

  int n_ = 0;
  std::array<int, kMaxDim> k_{};
};

namespace detail
{
template <class Fn>
void ball_recurse(MultiIndex& k, int i, int remaining, Fn& fn)
{
  if (i == k.dim() - 1)
  {
    for (int v = -remaining; v <= remaining; ++v)
    {
      k[i] = v;
      fn(static_cast<const MultiIndex&>(k));
    }
    k[i] = 0;
    return;
  }
  for (int v = -remaining; v <= remaining; ++v)
  {
    k[i] = v;
    ball_recurse(k, i + 1, remaining - std::abs(v), fn);
  }
  k[i] = 0;
}
} // namespace detail

/// Visits every k in Z^n with |k|_1 <= radius, in lexicographic order.
template <class Fn>
void for_each_in_ball(int n, int radius, Fn&& fn)
{
  if (radius < 0) return;
  MultiIndex k(n);
  detail::ball_recurse(k, 0, radius, fn);
}

} // namespace kam

#endif
