#ifndef KAM_GRID_HPP_
#define KAM_GRID_HPP_

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include "kam/errors.hpp"
#include "kam/fourier_series.hpp"

namespace kam
{

/// Smallest integer >= m of the form 2^a 3^b 5^c.
inline int good_fft_size(int m)
{
  if (m <= 1) return 1;
  for (int N = m;; ++N)
  {
    int r = N;
    for (int p : {2, 3, 5})
      while (r % p == 0) r /= p;
    if (r == 1) return N;
  }
}

/// Coefficients of grid-derived series below `kNoiseFloor * eps * rms` are
/// discarded: the transform cannot resolve them.
inline constexpr double kNoiseFloor = 8.0;

/// Uniform tensor grid on T^n with N points per dimension, x_j = 2 pi j / N,
/// and the FFTW plans mapping coefficients to samples and back.
class TorusGrid
{
public:
  TorusGrid(int n, int N) : n_(n), N_(N)
  {
    if (n < 1 || n > kMaxDim) throw StructuralError("TorusGrid: unsupported dimension");
    if (N < 1) throw ConfigurationError("TorusGrid: need at least one point per dimension");
    total_ = 1;
    for (int i = 0; i < n; ++i) total_ *= static_cast<std::size_t>(N);
    buffer_ = fftw_alloc_complex(total_);
    if (!buffer_) throw std::bad_alloc();
    std::vector<int> dims(n, N);
    forward_ = fftw_plan_dft(n, dims.data(), buffer_, buffer_, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft(n, dims.data(), buffer_, buffer_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }

  TorusGrid(const TorusGrid&) = delete;
  TorusGrid& operator=(const TorusGrid&) = delete;

  ~TorusGrid()
  {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(buffer_);
  }

  int dim() const { return n_; }
  int points_per_dim() const { return N_; }
  std::size_t size() const { return total_; }

  /// Coordinates of grid point `p` (row-major, last index fastest).
  void point(std::size_t p, double* x) const
  {
    for (int i = n_ - 1; i >= 0; --i)
    {
      x[i] = 2.0 * std::numbers::pi * static_cast<double>(p % N_) / N_;
      p /= N_;
    }
  }

  /// All grid points, row-major (size x n).
  std::vector<double> points() const
  {
    std::vector<double> xs(total_ * n_);
    for (std::size_t p = 0; p < total_; ++p) point(p, xs.data() + p * n_);
    return xs;
  }

  /// Samples f on the grid. Requires max_i |k_i| < N/2 to be alias-free.
  std::vector<Complex> synthesize(const FourierSeries& f)
  {
    check_dim(f);
    std::memset(buffer_, 0, sizeof(fftw_complex) * total_);
    for (const auto& [k, c] : f.terms())
    {
      const std::size_t idx = index_of(k);
      buffer_[idx][0] += c.real();
      buffer_[idx][1] += c.imag();
    }
    fftw_execute(backward_);
    std::vector<Complex> v(total_);
    for (std::size_t p = 0; p < total_; ++p) v[p] = Complex(buffer_[p][0], buffer_[p][1]);
    return v;
  }

  /// Values of several series at the grid points. Orders above the grid fold
  /// onto their residues mod N, which is exact at the nodes.
  std::vector<std::vector<Complex>> values_at_nodes(std::span<const FourierSeries> fs)
  {
    std::vector<std::vector<Complex>> out;
    for (const auto& f : fs)
    {
      if (f.dim() != n_) throw StructuralError("TorusGrid: series dimension mismatch");
      std::memset(buffer_, 0, sizeof(fftw_complex) * total_);
      for (const auto& [k, c] : f.terms())
      {
        const std::size_t idx = index_of(k);
        buffer_[idx][0] += c.real();
        buffer_[idx][1] += c.imag();
      }
      fftw_execute(backward_);
      std::vector<Complex> v(total_);
      for (std::size_t p = 0; p < total_; ++p) v[p] = Complex(buffer_[p][0], buffer_[p][1]);
      out.push_back(std::move(v));
    }
    return out;
  }

  /// Same as synthesize but keeps only the real part (for real-valued fields).
  std::vector<double> synthesize_real(const FourierSeries& f)
  {
    auto v = synthesize(f);
    std::vector<double> r(v.size());
    for (std::size_t p = 0; p < v.size(); ++p) r[p] = v[p].real();
    return r;
  }

  /// Discrete Fourier analysis of samples, keeping modes with |k|_1 <= out_order.
  ///
  /// Every discarded coefficient (outside the ball, or under the rounding
  /// floor of the transform) is added in l1 to `*dropped` when given.
  FourierSeries analyze(std::span<const Complex> values, int out_order, double* dropped = nullptr)
  {
    if (values.size() != total_) throw StructuralError("TorusGrid::analyze: wrong sample count");
    for (std::size_t p = 0; p < total_; ++p)
    {
      buffer_[p][0] = values[p].real();
      buffer_[p][1] = values[p].imag();
    }
    fftw_execute(forward_);
    const double scale = 1.0 / static_cast<double>(total_);
    std::vector<FourierSeries::Term> kept;
    double lost = 0.0, energy = 0.0, peak = 0.0;
    for (std::size_t p = 0; p < total_; ++p) energy += buffer_[p][0] * buffer_[p][0] + buffer_[p][1] * buffer_[p][1];
    energy *= scale * scale;
    // visit the retained modes in lexicographic order so the result needs no sort
    std::vector<char> taken(total_, 0);
    const int h = (N_ + 1) / 2 - 1;
    MultiIndex k(n_);
    std::function<void(int, int, std::size_t)> visit = [&](int i, int left, std::size_t idx) {
      if (i == n_)
      {
        taken[idx] = 1;
        const Complex c(buffer_[idx][0] * scale, buffer_[idx][1] * scale);
        if (c == Complex(0.0)) return;
        kept.emplace_back(k, c);
        peak = std::max(peak, std::abs(c));
        return;
      }
      const int lim = std::min(h, left);
      for (int v = -lim; v <= lim; ++v)
      {
        k[i] = v;
        visit(i + 1, left - std::abs(v), idx * N_ + static_cast<std::size_t>(v < 0 ? v + N_ : v));
      }
      k[i] = 0;
    };
    if (out_order >= 0) visit(0, out_order, 0);
    for (std::size_t p = 0; p < total_; ++p)
      if (!taken[p]) lost += std::hypot(buffer_[p][0], buffer_[p][1]) * scale;
    const double cut = std::max(kPruneRelative * peak,
                                kNoiseFloor * std::numeric_limits<double>::epsilon() * std::sqrt(energy));
    std::erase_if(kept, [&](const FourierSeries::Term& t) {
      const double a = std::abs(t.second);
      if (a <= cut)
      {
        lost += a;
        return true;
      }
      return false;
    });
    if (dropped) *dropped += lost;
    return FourierSeries::from_sorted(n_, std::move(kept));
  }

  FourierSeries analyze(std::span<const double> values, int out_order, double* dropped = nullptr)
  {
    std::vector<Complex> v(values.begin(), values.end());
    return analyze(std::span<const Complex>(v), out_order, dropped);
  }

private:
  void check_dim(const FourierSeries& f) const
  {
    if (f.dim() != n_) throw StructuralError("TorusGrid: series dimension mismatch");
    if (2 * f.max_component() >= N_)
      throw ConfigurationError("TorusGrid: grid of " + std::to_string(N_) +
                               " points cannot resolve order " + std::to_string(f.max_component()));
  }

  std::size_t index_of(const MultiIndex& k) const
  {
    std::size_t idx = 0;
    for (int i = 0; i < n_; ++i)
    {
      const int j = ((k[i] % N_) + N_) % N_;
      idx = idx * N_ + static_cast<std::size_t>(j);
    }
    return idx;
  }

  void decode(std::size_t p, MultiIndex& k) const
  {
    for (int i = n_ - 1; i >= 0; --i)
    {
      const int j = static_cast<int>(p % N_);
      k[i] = (2 * j < N_) ? j : j - N_;
      p /= N_;
    }
  }

  int n_;
  int N_;
  std::size_t total_ = 0;
  fftw_complex* buffer_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

} // namespace kam

#endif
