#ifndef KAM_MULTIPLY_HPP_
#define KAM_MULTIPLY_HPP_

#include <algorithm>
#include <array>
#include <vector>

#include "kam/grid.hpp"
#include "kam/torus_field.hpp"

namespace kam
{

/// Products with at most this many term pairs use direct convolution.
inline constexpr std::size_t kDirectProductPairs = 1u << 21;

/// Convolution product f * g truncated to |k| <= K_cap.
///
/// Small products are summed directly over term pairs; larger ones go
/// through an FFT grid wide enough that no retained mode is aliased.
inline FourierSeries multiply(const FourierSeries& f, const FourierSeries& g, int K_cap,
                              double* dropped = nullptr)
{
  if (f.dim() != g.dim()) throw StructuralError("multiply: dimension mismatch");
  if (K_cap < 0) throw PreconditionError("multiply: K_cap must be nonnegative");
  const int n = f.dim();
  if (f.empty() || g.empty()) return FourierSeries(n);

  if (f.size() * g.size() <= kDirectProductPairs)
  {
    // accumulate on the dense box of reachable indices; row-major order is lexicographic
    std::array<int, kMaxDim> lo{}, width{};
    std::size_t box = 1;
    for (int j = 0; j < n; ++j)
    {
      int flo = 0, fhi = 0, glo = 0, ghi = 0;
      bool first = true;
      for (const auto& [k, a] : f.terms())
      {
        flo = first ? k[j] : std::min(flo, k[j]);
        fhi = first ? k[j] : std::max(fhi, k[j]);
        first = false;
      }
      first = true;
      for (const auto& [k, a] : g.terms())
      {
        glo = first ? k[j] : std::min(glo, k[j]);
        ghi = first ? k[j] : std::max(ghi, k[j]);
        first = false;
      }
      lo[j] = std::max(flo + glo, -K_cap);
      width[j] = std::max(0, std::min(fhi + ghi, K_cap) - lo[j] + 1);
      box *= static_cast<std::size_t>(width[j]);
    }
    double lost = 0.0;
    std::vector<Complex> dense(box, Complex(0.0));
    std::vector<char> hit(box, 0);
    for (const auto& [k, a] : f.terms())
      for (const auto& [l, b] : g.terms())
      {
        const MultiIndex m = k + l;
        if (m.order() > K_cap)
        {
          lost += std::abs(a * b);
          continue;
        }
        std::size_t idx = 0;
        for (int j = 0; j < n; ++j) idx = idx * width[j] + static_cast<std::size_t>(m[j] - lo[j]);
        dense[idx] += a * b;
        hit[idx] = 1;
      }
    if (dropped) *dropped += lost;
    std::vector<FourierSeries::Term> out;
    MultiIndex m(n);
    for (std::size_t idx = 0; idx < box; ++idx)
    {
      if (!hit[idx]) continue;
      std::size_t q = idx;
      for (int j = n - 1; j >= 0; --j)
      {
        m[j] = lo[j] + static_cast<int>(q % width[j]);
        q /= width[j];
      }
      out.emplace_back(m, dense[idx]);
    }
    return FourierSeries::from_sorted(n, std::move(out));
  }

  const int spread = f.max_component() + g.max_component();
  const int keep = std::min(K_cap, spread);
  TorusGrid grid(n, good_fft_size(std::max(2 * keep + 2, keep + spread + 1)));
  auto fv = grid.synthesize(f);
  const auto gv = grid.synthesize(g);
  for (std::size_t p = 0; p < fv.size(); ++p) fv[p] *= gv[p];
  return grid.analyze(std::span<const Complex>(fv), K_cap, dropped);
}

/// Matrix product of Jacobian fields, entries truncated at K_cap.
inline JacobianField multiply(const JacobianField& A, const JacobianField& B, int K_cap,
                              double* dropped = nullptr)
{
  if (A.dim() != B.dim()) throw StructuralError("multiply: Jacobian dimension mismatch");
  const int n = A.dim();
  JacobianField C(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l)
        if (!A(i, l).empty() && !B(l, j).empty()) C(i, j) += multiply(A(i, l), B(l, j), K_cap, dropped);
  return C;
}

/// Matrix field times vector field, truncated at K_cap.
inline TorusMapField multiply(const JacobianField& A, const TorusMapField& v, int K_cap,
                              double* dropped = nullptr)
{
  if (A.dim() != v.dim()) throw StructuralError("multiply: field dimension mismatch");
  const int n = A.dim();
  TorusMapField out(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (!A(i, j).empty() && !v[j].empty()) out[i] += multiply(A(i, j), v[j], K_cap, dropped);
  return out;
}

} // namespace kam

#endif
