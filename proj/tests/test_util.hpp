#ifndef KAM_TESTS_TEST_UTIL_HPP_
#define KAM_TESTS_TEST_UTIL_HPP_

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "kam/kam.hpp"
#include "kam/step.hpp"

namespace kam::testing
{

inline const double kPhi = (1.0 + std::sqrt(5.0)) / 2.0;
inline const std::vector<double> kGolden{1.0, (1.0 + std::sqrt(5.0)) / 2.0};

inline MultiIndex random_index(std::mt19937_64& rng, int n, int K, bool allow_zero = false)
{
  std::uniform_int_distribution<int> d(-K, K);
  for (;;)
  {
    MultiIndex k(n);
    for (int i = 0; i < n; ++i) k[i] = d(rng);
    if (k.order() <= K && (allow_zero || !k.is_zero())) return k;
  }
}

/// Real series with `count` random conjugate pairs on 0 < |k| <= K, magnitudes ~ decay^|k|.
inline FourierSeries random_real_series(std::mt19937_64& rng, int n, int K, int count, double decay = 1.0,
                                        bool with_mean = false, int K_min = 1)
{
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<FourierSeries::Term> terms;
  for (int c = 0; c < count; ++c)
  {
    MultiIndex k = random_index(rng, n, K);
    if (k.order() < K_min) continue;
    const Complex v(u(rng), u(rng));
    const double scale = std::pow(decay, k.order());
    terms.emplace_back(k, v * scale);
    terms.emplace_back(-k, std::conj(v) * scale);
  }
  if (with_mean) terms.emplace_back(MultiIndex(n), Complex(u(rng), 0.0));
  return FourierSeries::from_terms(n, std::move(terms)).real_part();
}

/// Complex (not necessarily real) series.
inline FourierSeries random_series(std::mt19937_64& rng, int n, int K, int count, bool with_mean = true)
{
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<FourierSeries::Term> terms;
  for (int c = 0; c < count; ++c) terms.emplace_back(random_index(rng, n, K, with_mean), Complex(u(rng), u(rng)));
  return FourierSeries::from_terms(n, std::move(terms));
}

inline TorusMapField random_real_field(std::mt19937_64& rng, int n, int K, int count, double decay = 1.0,
                                       bool with_mean = false)
{
  std::vector<FourierSeries> c;
  for (int i = 0; i < n; ++i) c.push_back(random_real_series(rng, n, K, count, decay, with_mean));
  return TorusMapField(std::move(c));
}

/// Scales f so that its ||.||_s norm equals `target`.
template <class F>
F scaled_to(F f, double s, double target)
{
  const double nrm = norm_exp(f, s);
  if (nrm > 0.0) f *= target / nrm;
  return f;
}

/// max_k |f_k - g_k|
inline double coeff_distance(const FourierSeries& f, const FourierSeries& g)
{
  return (f - g).max_abs();
}

inline double coeff_distance(const TorusMapField& f, const TorusMapField& g)
{
  double m = 0.0;
  for (int i = 0; i < f.dim(); ++i) m = std::max(m, coeff_distance(f[i], g[i]));
  return m;
}

/// Fourier coefficients of a function sampled by `fn` on an N^n trapezoid grid, by direct DFT sums.
template <class Fn>
FourierSeries quadrature_coefficients(int n, int N, int K, Fn&& fn)
{
  std::vector<double> x(n);
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(N);
  std::vector<Complex> vals(total);
  std::vector<std::vector<double>> pts(total, std::vector<double>(n));
  for (std::size_t p = 0; p < total; ++p)
  {
    std::size_t q = p;
    for (int i = n - 1; i >= 0; --i)
    {
      x[i] = 2.0 * std::numbers::pi * static_cast<double>(q % N) / N;
      q /= N;
    }
    pts[p] = x;
    vals[p] = fn(x);
  }
  std::vector<FourierSeries::Term> terms;
  for_each_in_ball(n, K, [&](const MultiIndex& k) {
    Complex acc = 0.0;
    for (std::size_t p = 0; p < total; ++p)
    {
      double ph = 0.0;
      for (int i = 0; i < n; ++i) ph += k[i] * pts[p][i];
      acc += vals[p] * std::polar(1.0, -ph);
    }
    terms.emplace_back(k, acc / static_cast<double>(total));
  });
  return FourierSeries::from_terms(n, std::move(terms));
}

inline const double kSchemeR = 2.0 * std::log(512.0); // n = 2, b = 4, tau = 1

/// Normalized golden-mean frequency (alpha = 1 for tau = 1 on |k| <= 256).
inline const std::vector<double>& golden_normalized()
{
  static const std::vector<double> w = normalize_time(estimate_alpha_tau(kGolden, 256, 1.0)).omega;
  return w;
}

/// A step input satisfying the smallness conditions: Psi_hat of order <= K/4 with
/// ||D Psi - I||_s = dpsi, and Q with content on |k| <= K plus a tail on (K, 2K]
/// carrying `tail_fraction` of its mass, scaled so that 4 Delta |||Q|||_s = load.
inline StepInput admissible_step_input(std::mt19937_64& rng, int K, double load, double dpsi = 0.1,
                                       double tail_fraction = 0.3)
{
  const int n = 2;
  const double s = kSchemeR / K;
  TorusMapField hat(n);
  if (dpsi > 0.0)
  {
    hat = random_real_field(rng, n, std::max(1, K / 4), 4, 0.8);
    hat *= dpsi / norm_exp(derivative(hat), s);
  }
  auto psi = make_transform(hat, s, 2 * K);
  TorusMapField low = random_real_field(rng, n, K, 6, 0.9);
  TorusMapField tail = map_components(random_real_field(rng, n, 2 * K, 12, 1.0),
                                      [&](const FourierSeries& c) { return project_shell(c, K, 2 * K); });
  low *= 1.0 / std::max(norm_mean_l2(low, s), 1e-300);
  if (!tail.is_zero()) tail *= tail_fraction / norm_mean_l2(tail, s);
  TorusMapField Q = low + tail;
  StepInput in = make_step_input(std::move(psi), Q, golden_normalized(), K, s);
  in.Q *= load / (4.0 * in.Delta * norm_mean_l2(in.Q, s));
  return in;
}

// (1/|U_s|) int_{U_s} |f|^2 for n = 2: trapezoid in x (exact for trig polynomials),
// Gauss-Legendre in y over [-s, s]^2.
inline double mean_square_quadrature(const FourierSeries& f, double s)
{
  using GL = boost::math::quadrature::gauss<double, 30>;
  const int N = 2 * f.max_component() + 2;
  double total = 0.0;
  auto gl = [&](auto&& g) {
    return GL::integrate(g, -s, s) / (2 * s);
  };
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b)
    {
      const double x0 = 2 * std::numbers::pi * a / N, x1 = 2 * std::numbers::pi * b / N;
      total += gl([&](double y0) {
        return gl([&](double y1) {
          Complex v = 0.0;
          for (const auto& [k, c] : f.terms())
            v += c * std::polar(std::exp(-(k[0] * y0 + k[1] * y1)), k[0] * x0 + k[1] * x1);
          return std::norm(v);
        });
      });
    }
  return total / (N * N);
}

} // namespace kam::testing

#endif
