#ifndef KAM_STEP_HPP_
#define KAM_STEP_HPP_

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "kam/compose.hpp"
#include "kam/diophantine.hpp"
#include "kam/jacobian.hpp"
#include "kam/small_divisor.hpp"

namespace kam
{

/// What to do when a smallness condition of the step fails.
enum class PreconditionPolicy
{
  enforce, ///< throw StepPreconditionError
  report   ///< record the violation and carry on
};

struct StepInput
{
  NearIdentityTransform psi;
  TorusMapField Q;
  std::vector<double> omega;
  int K = 1;
  double s = 1.0;
  double Delta = 1.0; ///< C K Omega(K), C = 2^n e^{sK}
  double Omega = 1.0;
};

/// Fills Omega and Delta = 2^n e^{sK} K Omega(K) from the frequency vector.
inline StepInput make_step_input(NearIdentityTransform psi, TorusMapField Q, std::vector<double> omega, int K,
                                 double s)
{
  if (K < 1) throw PreconditionError("make_step_input: K must be >= 1");
  if (!(s > 0.0)) throw PreconditionError("make_step_input: s must be positive");
  StepInput in;
  const int n = Q.dim();
  in.Omega = omega_max(omega, K);
  in.Delta = std::ldexp(1.0, n) * exp_weight(K, s) * K * in.Omega;
  in.psi = std::move(psi);
  in.Q = std::move(Q);
  in.omega = std::move(omega);
  in.K = K;
  in.s = s;
  return in;
}

struct StepOptions
{
  double tol = -1.0; ///< < 0: 1e-13 * 4 Delta |||Q|||_s
  int max_iter = 60;
  int cap = -1; ///< working truncation; < 0: 2K
  PreconditionPolicy policy = PreconditionPolicy::enforce;
  double contraction_limit = 0.55;
  int check_grid = 48; ///< points per dimension for the conjugacy identity check; 0 skips it
  std::optional<std::vector<double>> start_Z;
  std::optional<TorusMapField> start_Phi;
};

struct StepDiagnostics
{
  std::vector<BoundReport> preconditions;
  std::vector<std::string> violations;
  std::vector<double> distances;   ///< Delta |Z - Z'| v K ||Phi - Phi'||_{s/2} per iteration
  std::vector<double> contraction; ///< ratio of consecutive distances
  int iterations = 0;
  double tol = 0.0;
  BoundReport ball;
  BoundReport q_plus;        ///< |||Q+|||_{s/4} <= 4 |||(I - Pi) Q|||_{s/2}, informational
  BoundReport dphi;          ///< ||D Phi||_{s/2} <= 3/2
  BoundReport dphi_inverse;  ///< ||D Phi^{-1}||_{s/2} <= 3/2
  double fixed_point_residual = 0.0;
  double identity_residual = 0.0; ///< sup of D Phi_hat w + D Phi Q+ + Z - T on a check grid
  double identity_budget = 0.0;
  double dropped_mass = 0.0;
  double max_contraction() const
  {
    double m = 0.0;
    for (double c : contraction) m = std::max(m, c);
    return m;
  }
};

struct StepOutput
{
  std::vector<double> Z;
  TorusMapField Phi_hat;
  TorusMapField Q_plus;
  StepDiagnostics diag;
};

/// T(Z, Phi_hat) = (Q + Theta Z) o (I + Phi_hat), Theta = D Psi^{-1} (D Psi - Id).
inline TorusMapField T_operator(std::span<const double> Z, const TorusMapField& Phi_hat, const TorusMapField& Q,
                                const JacobianField& Theta, int K_out, double* dropped = nullptr)
{
  TorusMapField F = Q;
  bool zero = true;
  for (double z : Z) zero = zero && z == 0.0;
  if (!zero) F += Theta.apply(Z);
  ComposeOptions opt;
  opt.output_order = K_out;
  ComposeReport rep;
  TorusMapField out = compose(F, Phi_hat, opt, &rep);
  if (dropped) *dropped += rep.dropped_mass;
  return out;
}

/// max over components of the sup of a series field on an N^n grid.
inline double grid_sup(const TorusMapField& f, int N)
{
  TorusGrid g(f.dim(), N);
  double m = 0.0;
  for (int i = 0; i < f.dim(); ++i)
    for (const Complex& v : g.synthesize(f[i])) m = std::max(m, std::abs(v));
  return m;
}

namespace detail
{
inline void precondition(StepDiagnostics& d, PreconditionPolicy policy, BoundReport r, double tol = 0.0)
{
  if (!r.holds(tol))
  {
    d.violations.push_back(r.name);
    if (policy == PreconditionPolicy::enforce)
      throw StepPreconditionError("step precondition " + r.name + " violated: " + std::to_string(r.lhs) + " > " +
                                      std::to_string(r.rhs),
                                  -1, r.name, r.lhs, r.rhs);
  }
  d.preconditions.push_back(std::move(r));
}
} // namespace detail

/// Checks the smallness conditions of a step without solving it.
inline std::vector<BoundReport> step_preconditions(const StepInput& in)
{
  const int n = in.Q.dim();
  const double q = norm_mean_l2(in.Q, in.s);
  std::vector<BoundReport> out;
  out.push_back(make_report("4Delta|||Q|||_s<=1/4", 4.0 * in.Delta * q, 0.25, {{"Delta", in.Delta}}));
  out.push_back(make_report("|DPsi-I|_s<=1/7", norm_exp(in.psi.dhat, in.s), 1.0 / 7.0, {{"s", in.s}}));
  out.push_back(make_report("sK>=(4/3)^n", std::pow(4.0 / 3.0, n), in.s * in.K, {{"sK", in.s * in.K}}));
  out.push_back(make_report("sK>=(4/3)^(n/2)", std::pow(4.0 / 3.0, 0.5 * n), in.s * in.K, {{"sK", in.s * in.K}}));
  return out;
}

/// The conjugacy identity D Phi_hat w + D Phi Q+ + Z - (Q + Theta Z) o Phi, evaluated
/// by direct summation at the points of a uniform N^n grid. Returns the sup.
inline double step_identity_residual(const StepInput& in, std::span<const double> Z, const TorusMapField& Phi_hat,
                                     const TorusMapField& Q_plus, int N)
{
  const int n = in.Q.dim();
  TorusGrid grid(n, N);
  const std::size_t G = grid.size();
  const auto pts = grid.points();

  std::vector<FourierSeries> local;
  const TorusMapField dw = del_omega(Phi_hat, in.omega);
  const JacobianField D = derivative(Phi_hat);
  for (int i = 0; i < n; ++i) local.push_back(Phi_hat[i]);
  for (int i = 0; i < n; ++i) local.push_back(dw[i]);
  for (int i = 0; i < n; ++i) local.push_back(Q_plus[i]);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) local.push_back(D(i, j));
  const auto v = grid.values_at_nodes(local);

  std::vector<double> shifted(pts.begin(), pts.end());
  for (std::size_t p = 0; p < G; ++p)
    for (int j = 0; j < n; ++j) shifted[p * n + j] += v[j][p].real();
  const TorusMapField F = in.Q + in.psi.theta().apply(Z);
  const auto composed = evaluate_many(F.components(), shifted, n);

  double sup = 0.0;
  for (std::size_t p = 0; p < G; ++p)
    for (int i = 0; i < n; ++i)
    {
      Complex r = v[n + i][p] + v[2 * n + i][p] + Z[i] - composed[i][p];
      for (int j = 0; j < n; ++j) r += v[3 * n + i * n + j][p] * v[2 * n + j][p];
      sup = std::max(sup, std::abs(r));
    }
  return sup;
}

/// Q+ = D Phi^{-1} (I - Pi) T(Z, Phi_hat), truncated at the working cap.
inline TorusMapField form_q_plus(const StepInput& in, std::span<const double> Z, const TorusMapField& Phi_hat,
                                 int cap, double* dropped = nullptr)
{
  const TorusMapField T = T_operator(Z, Phi_hat, in.Q, in.psi.theta(), cap, dropped);
  const TorusMapField R = project(T, in.K, Part::tail_I_minus_Pi);
  SolveReport rep;
  TorusMapField out = solve_near_identity(derivative(Phi_hat), R, cap, 4, &rep);
  if (dropped) *dropped += rep.dropped_mass;
  return out;
}

/// One KAM step: the fixed point of Z1 = Pr0 T, Phi1 = L Pr1 T by contraction, then Q+.
inline StepOutput solve_step(const StepInput& in, const StepOptions& opt = {})
{
  const int n = in.Q.dim();
  const int K = in.K;
  const double s = in.s;
  const int cap = opt.cap < 0 ? 2 * K : opt.cap;
  if (cap < K) throw ConfigurationError("solve_step: working cap below K");
  StepOutput out;
  StepDiagnostics& d = out.diag;

  const auto pre = step_preconditions(in);
  detail::precondition(d, opt.policy, pre[0], 1e-12);
  detail::precondition(d, opt.policy, pre[1], 1e-12);
  detail::precondition(d, opt.policy, pre[2], 1e-12);
  d.preconditions.push_back(pre[3]);

  const double q_s = norm_mean_l2(in.Q, s);
  const double radius = 4.0 * in.Delta * q_s;
  d.tol = opt.tol >= 0.0 ? opt.tol : 1e-13 * radius;
  const JacobianField Theta = in.psi.theta();

  std::vector<double> Z = opt.start_Z.value_or(std::vector<double>(n, 0.0));
  TorusMapField Phi = opt.start_Phi.value_or(TorusMapField(n));
  auto apply_map = [&](const std::vector<double>& z, const TorusMapField& phi, std::vector<double>& z1,
                       TorusMapField& phi1) {
    const TorusMapField T = T_operator(z, phi, in.Q, Theta, K, &d.dropped_mass);
    z1 = project(T, K, Part::mean_Pr0).mean();
    phi1 = solve_L(project(T, K, Part::nonconstant_Pr1), in.omega, K).real_part();
  };
  auto distance = [&](const std::vector<double>& z0, const TorusMapField& p0, const std::vector<double>& z1,
                       const TorusMapField& p1) {
    double dz = 0.0;
    for (int i = 0; i < n; ++i) dz = std::max(dz, std::abs(z0[i] - z1[i]));
    return std::max(in.Delta * dz, K * norm_exp(p0 - p1, 0.5 * s));
  };

  bool converged = in.Q.is_zero() && !opt.start_Phi && !opt.start_Z;
  if (converged) d.iterations = 1;
  for (int it = 1; !converged && it <= opt.max_iter; ++it)
  {
    std::vector<double> Z1;
    TorusMapField Phi1;
    apply_map(Z, Phi, Z1, Phi1);
    const double dist = distance(Z, Phi, Z1, Phi1);
    if (!d.distances.empty() && d.distances.back() > 0.0) d.contraction.push_back(dist / d.distances.back());
    d.distances.push_back(dist);
    Z = std::move(Z1);
    Phi = std::move(Phi1);
    d.iterations = it;
    if (dist < d.tol) converged = true;
  }
  if (!converged)
    throw DivergenceError("solve_step: no convergence after " + std::to_string(opt.max_iter) + " iterations");

  {
    std::vector<double> Z1;
    TorusMapField Phi1;
    apply_map(Z, Phi, Z1, Phi1);
    d.fixed_point_residual = distance(Z, Phi, Z1, Phi1);
  }

  d.ball = make_report("ball", std::max(in.Delta * norm_const(Z), K * norm_exp(Phi, 0.5 * s)), radius,
                       {{"Delta", in.Delta}, {"K", K}});

  const JacobianField DPhi = derivative(Phi);
  d.dphi = make_report("|DPhi|_{s/2}<=3/2", norm_exp_identity_plus(DPhi, 0.5 * s), 1.5);
  const double mu = norm_exp(DPhi, 0.5 * s);
  if (mu < 1.0)
  {
    const auto inv = invert_near_identity(DPhi, 0.5 * s, 1e-17 * std::max(mu, 1e-300), cap);
    d.dphi_inverse = make_report("|DPhi^-1|_{s/2}<=3/2", norm_exp_identity_plus(inv.deviation, 0.5 * s), 1.5);
  }
  else
    d.dphi_inverse = make_report("|DPhi^-1|_{s/2}<=3/2", kInf, 1.5);

  out.Q_plus = form_q_plus(in, Z, Phi, cap, &d.dropped_mass);
  d.q_plus = make_report("|||Q+|||_{s/4}<=4|||(I-Pi)Q|||_{s/2}", norm_mean_l2(out.Q_plus, 0.25 * s),
                         4.0 * norm_mean_l2(project(in.Q, K, Part::tail_I_minus_Pi), 0.5 * s));

  if (opt.check_grid > 0)
  {
    d.identity_residual = step_identity_residual(in, Z, Phi, out.Q_plus, opt.check_grid);
    // truncation mass, round-off, and the fixed point being solved only to tolerance
    const double scale = in.Q.l1() + norm_const(Z);
    d.identity_budget = 2.0 * d.dropped_mass + 1e-12 * scale + (1.0 + norm_const(in.omega)) * d.fixed_point_residual;
  }

  out.Z = std::move(Z);
  out.Phi_hat = std::move(Phi);
  return out;
}

} // namespace kam

#endif
