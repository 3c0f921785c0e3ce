#ifndef KAM_COMPOSE_HPP_
#define KAM_COMPOSE_HPP_

#include <cmath>
#include <functional>
#include <vector>

#include "kam/grid.hpp"
#include "kam/torus_field.hpp"

namespace kam
{

struct ComposeOptions
{
  int grid_factor = 2;      ///< grid points per retained bandwidth, >= 2
  int output_order = -1;    ///< |k| cap of the result; -1 keeps the full resolved spectrum
  int grid_points = 0;      ///< 0 picks the grid automatically
  double taylor_tol = 1e-17;///< relative size of the neglected Taylor remainder
  double direct_threshold = 0.5; ///< above this |k||phi_hat| the samples are summed directly
};

struct ComposeReport
{
  int grid_points = 0;
  int taylor_terms = 0;
  int output_order = 0;
  bool direct = false;
  double dropped_mass = 0.0; ///< l1 mass outside the output plus Taylor remainder bound
};

namespace detail
{
inline double factorial(int m)
{
  double r = 1.0;
  for (int i = 2; i <= m; ++i) r *= i;
  return r;
}

// Smallest M >= 1 with eta^{M+1}/(M+1)! e^eta <= tol.
inline int taylor_terms_for(double eta, double tol)
{
  if (eta == 0.0) return 0;
  int M = 1;
  double term = eta * eta / 2.0;
  while (term * std::exp(eta) > tol && M < 200)
  {
    ++M;
    term *= eta / (M + 1);
  }
  return M;
}

template <class Fn>
void for_each_alpha(int n, int max_order, Fn&& fn)
{
  std::vector<int> alpha(n, 0);
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == n - 1)
    {
      for (int v = 0; v <= left; ++v)
      {
        alpha[i] = v;
        int tot = 0;
        for (int a : alpha) tot += a;
        if (tot > 0) fn(static_cast<const std::vector<int>&>(alpha));
      }
      alpha[i] = 0;
      return;
    }
    for (int v = 0; v <= left; ++v)
    {
      alpha[i] = v;
      rec(i + 1, left - v);
    }
    alpha[i] = 0;
  };
  rec(0, max_order);
}
} // namespace detail

/// Fourier coefficients of x -> f_q(x + phi_hat(x)) for every f_q in `fs`.
///
/// The composed function is sampled on a uniform grid and transformed back.
/// Samples come from the Taylor expansion sum_alpha phi_hat^alpha d^alpha f / alpha!
/// evaluated on the grid (each term through its own transform, so small
/// corrections keep full relative accuracy), or from direct trigonometric
/// summation when |k| |phi_hat| is not small. The grid satisfies
/// N >= grid_factor (K_out + 1) and N > K_out + K_spec, where K_spec is the
/// spectral reach of the expansion, so retained modes are alias-free.
inline std::vector<FourierSeries> compose_all(std::span<const FourierSeries> fs,
                                              const TorusMapField& phi_hat,
                                              const ComposeOptions& opt = {},
                                              ComposeReport* report = nullptr)
{
  if (opt.grid_factor < 2) throw ConfigurationError("compose: grid_factor must be >= 2");
  const int n = phi_hat.dim();
  int Kf = 0;
  double f_mass = 0.0;
  bool real_input = phi_hat.is_real();
  for (const auto& f : fs)
  {
    if (f.dim() != n) throw StructuralError("compose: dimension mismatch");
    Kf = std::max(Kf, f.order());
    f_mass = std::max(f_mass, f.l1());
  }
  if (!real_input) throw PreconditionError("compose: phi_hat must be real-valued");

  const int Kh = phi_hat.order();
  std::vector<double> h_mass(n);
  double h_sup = 0.0;
  for (int j = 0; j < n; ++j)
  {
    h_mass[j] = phi_hat[j].l1();
    h_sup = std::max(h_sup, h_mass[j]);
  }
  const double eta = Kf * h_sup;
  const int M = detail::taylor_terms_for(eta, opt.taylor_tol);
  const int K_spec = Kf + M * Kh;
  const int K_out = opt.output_order < 0 ? K_spec : std::min(opt.output_order, K_spec);
  const int N_req = std::max(opt.grid_factor * (K_out + 1), K_out + K_spec + 1);

  ComposeReport rep;
  rep.taylor_terms = M;
  rep.output_order = K_out;
  rep.direct = eta > opt.direct_threshold;

  std::vector<FourierSeries> out;
  out.reserve(fs.size());

  if (M == 0)
  {
    for (const auto& f : fs)
    {
      out.push_back(project(f, K_out, Part::full_Pi));
      rep.dropped_mass += project(f, K_out, Part::tail_I_minus_Pi).l1();
    }
    if (report) *report = rep;
    return out;
  }

  int N = good_fft_size(N_req);
  if (opt.grid_points > 0)
  {
    if (opt.grid_points < N_req)
      throw ConfigurationError("compose: grid of " + std::to_string(opt.grid_points) +
                               " points is too small for output order " + std::to_string(K_out) +
                               " (need " + std::to_string(N_req) + ")");
    N = opt.grid_points;
  }
  rep.grid_points = N;

  TorusGrid grid(n, N);
  const std::size_t G = grid.size();
  std::vector<std::vector<double>> h(n);
  for (int j = 0; j < n; ++j) h[j] = grid.synthesize_real(phi_hat[j]);

  if (rep.direct)
  {
    auto pts = grid.points();
    for (std::size_t p = 0; p < G; ++p)
      for (int j = 0; j < n; ++j) pts[p * n + j] += h[j][p];
    const auto vals = evaluate_many(fs, pts, n);
    for (std::size_t q = 0; q < fs.size(); ++q)
    {
      auto g = grid.analyze(std::span<const Complex>(vals[q]), K_out, &rep.dropped_mass);
      out.push_back(fs[q].is_real() ? g.real_part() : g);
    }
    rep.dropped_mass += std::pow(eta, M + 1) / detail::factorial(M + 1) * std::exp(eta) * f_mass;
    if (report) *report = rep;
    return out;
  }

  std::vector<Complex> work(G);
  for (const auto& f : fs)
  {
    FourierSeries acc = project(f, K_out, Part::full_Pi);
    rep.dropped_mass += project(f, K_out, Part::tail_I_minus_Pi).l1();
    const double fl1 = f.l1();
    detail::for_each_alpha(n, M, [&](const std::vector<int>& alpha) {
      // |h^alpha d^alpha f / alpha!| <= prod h_j^a_j * sum |k^alpha f_k| / alpha!
      double hprod = 1.0, afact = 1.0;
      for (int j = 0; j < n; ++j)
      {
        hprod *= std::pow(h_mass[j], alpha[j]);
        afact *= detail::factorial(alpha[j]);
      }
      std::vector<FourierSeries::Term> dterms;
      double dmass = 0.0;
      for (const auto& [k, c] : f.terms())
      {
        Complex factor = 1.0;
        for (int j = 0; j < n; ++j)
          for (int a = 0; a < alpha[j]; ++a) factor *= Complex(0.0, k[j]);
        if (factor == Complex(0.0)) continue;
        const Complex v = factor * c / afact;
        dterms.emplace_back(k, v);
        dmass += std::abs(v);
      }
      const double bound = hprod * dmass;
      if (bound == 0.0) return;
      if (bound <= opt.taylor_tol * fl1)
      {
        rep.dropped_mass += bound;
        return;
      }
      const auto d = FourierSeries::from_sorted(n, std::move(dterms));
      auto vals = grid.synthesize(d);
      for (std::size_t p = 0; p < G; ++p)
      {
        double w = 1.0;
        for (int j = 0; j < n; ++j)
          for (int a = 0; a < alpha[j]; ++a) w *= h[j][p];
        work[p] = vals[p] * w;
      }
      acc += grid.analyze(std::span<const Complex>(work), K_out, &rep.dropped_mass);
    });
    rep.dropped_mass += std::pow(eta, M + 1) / detail::factorial(M + 1) * std::exp(eta) * fl1;
    out.push_back(f.is_real() ? acc.real_part() : acc);
  }
  if (report) *report = rep;
  return out;
}

/// x -> f(x + phi_hat(x)).
inline FourierSeries compose(const FourierSeries& f, const TorusMapField& phi_hat,
                             const ComposeOptions& opt = {}, ComposeReport* report = nullptr)
{
  return compose_all(std::span<const FourierSeries>(&f, 1), phi_hat, opt, report).front();
}

/// Componentwise composition of a vector field with I + phi_hat.
inline TorusMapField compose(const TorusMapField& F, const TorusMapField& phi_hat,
                             const ComposeOptions& opt = {}, ComposeReport* report = nullptr)
{
  return TorusMapField(compose_all(F.components(), phi_hat, opt, report));
}

} // namespace kam

#endif
