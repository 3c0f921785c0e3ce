#ifndef KAM_SCHEME_HPP_
#define KAM_SCHEME_HPP_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "kam/step.hpp"

namespace kam
{

/// Geometric schedule K_nu = b^nu, s_nu = r / K_nu, Delta_nu = K_nu^{tau+1}.
struct Schedule
{
  int n = 2;
  double tau = 1.0;
  long b = 4;
  double margin = 0.0;
  double r = 0.0;
  double theta = 0.0; ///< 4^n e^{-r/2}
  double B = 0.0;     ///< 2 e^r
  double A = 0.0;     ///< sup_nu Delta_nu / m_nu
  int nu_max = 6;
  std::vector<int> K;
  std::vector<double> s;
  std::vector<double> Delta;
  std::vector<double> m; ///< m_nu = min_{|k| > K_{nu-1}} |k|^{tau+1}, m_0 = 1
  std::vector<std::string> warnings;

  PowerWeight weight() const { return PowerWeight{tau + 1.0}; }
};

inline Schedule build_schedule(int n, double tau, long b, double margin = 0.0, int nu_max = 6)
{
  if (n < 1 || n > kMaxDim) throw StructuralError("build_schedule: unsupported dimension");
  if (b < 2) throw PreconditionError("build_schedule: b must be >= 2");
  if (tau < n - 1) throw PreconditionError("build_schedule: tau must be >= n - 1");
  if (nu_max < 0) throw PreconditionError("build_schedule: nu_max must be >= 0");
  if (margin < 0.0) throw PreconditionError("build_schedule: margin must be >= 0");
  Schedule sc;
  sc.n = n;
  sc.tau = tau;
  sc.b = b;
  sc.margin = margin;
  sc.nu_max = nu_max;
  if (b < 4) sc.warnings.push_back("b = " + std::to_string(b) + " < 4: the scheme's estimates assume b >= 4");
  const double bt = std::pow(static_cast<double>(b), tau + 1.0);
  sc.r = 2.0 * std::log(std::pow(4.0, n) * 2.0 * bt) + margin;
  sc.theta = std::pow(4.0, n) * std::exp(-0.5 * sc.r);
  sc.B = 2.0 * std::exp(sc.r);
  sc.A = bt;
  long Kv = 1;
  for (int nu = 0; nu <= nu_max; ++nu)
  {
    if (Kv > (1L << 24)) throw ConfigurationError("build_schedule: K_nu overflows; lower nu_max");
    sc.K.push_back(static_cast<int>(Kv));
    sc.s.push_back(sc.r / static_cast<double>(Kv));
    sc.Delta.push_back(std::pow(static_cast<double>(Kv), tau + 1.0));
    sc.m.push_back(nu == 0 ? 1.0 : std::pow(sc.K[nu - 1] + 1.0, tau + 1.0));
    Kv *= b;
  }
  return sc;
}

/// Delta P_nu blocks of P on K_{nu-1} < |k| <= K_nu.
struct Approximants
{
  std::vector<TorusMapField> delta; ///< Delta P_nu, nu = 0..nu_max
  TorusMapField remainder;          ///< P - P_{nu_max}
  std::vector<double> rho;          ///< ||Delta P_nu||_m, including the blocks of the remainder
  double eps = 0.0;                 ///< sum of rho
};

inline Approximants approximants(const TorusMapField& P, const Schedule& sc)
{
  for (const auto& c : P.components())
    if (std::abs(c.mean()) != 0.0) throw PreconditionError("approximants: perturbation must have zero mean");
  Approximants ap;
  const PowerWeight w = sc.weight();
  int prev = 0;
  for (int nu = 0; nu <= sc.nu_max; ++nu)
  {
    const int K = sc.K[nu];
    TorusMapField d = map_components(P, [&](const FourierSeries& c) { return project_shell(c, nu == 0 ? -1 : prev, K); });
    ap.rho.push_back(norm_m(d, w));
    ap.delta.push_back(std::move(d));
    prev = K;
  }
  ap.remainder = project(P, prev, Part::tail_I_minus_Pi);
  long Kb = prev;
  while (!project(ap.remainder, static_cast<int>(Kb), Part::tail_I_minus_Pi).is_zero())
  {
    const long next = Kb * sc.b;
    auto block = map_components(ap.remainder, [&](const FourierSeries& c) {
      return project_shell(c, static_cast<int>(Kb), static_cast<int>(std::min<long>(next, 1L << 30)));
    });
    ap.rho.push_back(norm_m(block, w));
    Kb = next;
  }
  for (double r : ap.rho) ap.eps += r;
  return ap;
}

/// Blocks of P for a run: the mean of P is a pure modifying term, so it is split
/// off before the blocks are measured and carried in Delta P_0.
inline Approximants run_approximants(const TorusMapField& P, const Schedule& sc)
{
  TorusMapField mean(P.dim());
  for (int i = 0; i < P.dim(); ++i) mean[i] = project(P[i], 0, Part::mean_Pr0);
  Approximants ap = approximants(P - mean, sc);
  ap.delta[0] += mean;
  return ap;
}

/// eps_nu = B sum_{mu<=nu} theta^{nu-mu} rho_mu / m_mu, closed form.
inline double ledger_eps_closed(const std::vector<double>& rho, const Schedule& sc, int nu)
{
  double acc = 0.0;
  for (int mu = 0; mu <= nu; ++mu)
  {
    const double r = mu < static_cast<int>(rho.size()) ? rho[mu] : 0.0;
    acc += std::pow(sc.theta, nu - mu) * r / sc.m[mu];
  }
  return sc.B * acc;
}

struct LedgerEntry
{
  double eps = 0.0;
  double delta = 0.0;
};

/// One step of the recursion eps_{nu} = theta eps_{nu-1} + (B / m_nu) rho_nu and
/// delta_nu = prod_{mu<nu} (1 + 4 Delta_mu eps_mu) - 1.
inline LedgerEntry ledger_update(const std::vector<LedgerEntry>& prev, const std::vector<double>& rho,
                                 const Schedule& sc, int nu)
{
  if (nu < 0 || nu > sc.nu_max) throw PreconditionError("ledger_update: nu out of range");
  if (static_cast<int>(prev.size()) < nu) throw PreconditionError("ledger_update: missing earlier entries");
  const double r = nu < static_cast<int>(rho.size()) ? rho[nu] : 0.0;
  LedgerEntry e;
  e.eps = (nu == 0 ? 0.0 : sc.theta * prev[nu - 1].eps) + sc.B / sc.m[nu] * r;
  // expm1 of a log1p sum keeps full relative precision when every factor is near 1
  double log_prod = 0.0;
  for (int mu = 0; mu < nu; ++mu) log_prod += std::log1p(4.0 * sc.Delta[mu] * prev[mu].eps);
  e.delta = std::expm1(log_prod);
  return e;
}

inline std::vector<LedgerEntry> build_ledger(const std::vector<double>& rho, const Schedule& sc)
{
  std::vector<LedgerEntry> out;
  for (int nu = 0; nu <= sc.nu_max; ++nu) out.push_back(ledger_update(out, rho, sc, nu));
  return out;
}

/// The a-priori smallness gates on eps = sum ||Delta P_nu||_m.
struct GateReport
{
  double eps = 0.0;
  BoundReport spec_gate;   ///< 2 A B eps <= 1/32
  BoundReport strict_gate; ///< 2 A B eps <= 1 / (16 2^n e^r): keeps 4 Delta_step eps_nu <= 1/4
};

inline GateReport smallness_gates(double eps, const Schedule& sc)
{
  GateReport g;
  g.eps = eps;
  const double lhs = 2.0 * sc.A * sc.B * eps;
  g.spec_gate = make_report("2ABeps<=1/32", lhs, 1.0 / 32.0, {{"eps", eps}});
  g.strict_gate =
      make_report("2ABeps<=1/(16*2^n*e^r)", lhs, 1.0 / (16.0 * std::ldexp(1.0, sc.n) * std::exp(sc.r)), {{"eps", eps}});
  return g;
}

struct GeneratorOptions
{
  int n = 2;
  double tau = 1.0;
  long b = 4;
  double size = 1e-5;
  double decay_exponent = 1.5;
  std::uint64_t seed = 1;
  int max_order = 64;
  std::optional<MultiIndex> forced_mode; ///< P = size (e_k + e_{-k}) in the first component
};

struct GeneratorReport
{
  double block_norm = 0.0; ///< ||P||_{tau+1, b}
  double sup_weighted = 0.0; ///< max_k |p_k| |k|^n over the generated modes
  double cn_sum = 0.0;       ///< sum_k |p_k| |k|^n over the generated modes
  double cn_sum_half = 0.0;  ///< the same sum over |k| <= max_order / 2
  double cn_exponent = 0.0;  ///< sum_{|k| = m} |p_k| |k|^n grows like m^{cn_exponent}
  bool sub_cn = false;       ///< sum |p_k| |k|^n diverges in the infinite-order limit
  bool sup_unbounded = false; ///< |p_k| |k|^n unbounded in that limit
  bool block_norm_finite = false; ///< ||P||_{tau+1,b} finite in that limit
};

namespace detail
{
// Uniform phase in [0, 2 pi) from the top 53 bits, independent of library distributions.
inline double random_phase(std::mt19937_64& rng)
{
  return 2.0 * std::numbers::pi * static_cast<double>(rng() >> 11) * 0x1.0p-53;
}
} // namespace detail

/// p_k = size xi_k |k|^{-(tau+1)} (1 + |k|)^{-decay}, conjugate symmetric, |k| <= max_order.
inline TorusMapField generate_perturbation(const GeneratorOptions& g, GeneratorReport* report = nullptr)
{
  if (!(g.decay_exponent > 0.0)) throw PreconditionError("generate_perturbation: decay_exponent must be > 0");
  if (g.max_order < 1) throw PreconditionError("generate_perturbation: max_order must be >= 1");
  const int n = g.n;
  TorusMapField P(n);
  if (g.forced_mode)
  {
    const MultiIndex& k = *g.forced_mode;
    if (k.dim() != n || k.is_zero()) throw PreconditionError("generate_perturbation: forced mode must be nonzero");
    if (g.size != 0.0) P[0] = FourierSeries::from_terms(n, {{k, g.size}, {-k, g.size}});
  }
  else if (g.size != 0.0)
  {
    std::mt19937_64 rng(g.seed);
    for (int i = 0; i < n; ++i)
    {
      std::vector<FourierSeries::Term> terms;
      for_each_in_ball(n, g.max_order, [&](const MultiIndex& k) {
        if (!k.is_positive_half()) return;
        const double a = g.size * std::pow(k.order(), -(g.tau + 1.0)) * std::pow(1.0 + k.order(), -g.decay_exponent);
        const Complex c = std::polar(a, detail::random_phase(rng));
        terms.emplace_back(k, c);
        terms.emplace_back(-k, std::conj(c));
      });
      P[i] = FourierSeries::from_terms(n, std::move(terms));
    }
  }
  if (report)
  {
    GeneratorReport r;
    r.block_norm = P.is_zero() ? 0.0 : norm_block(P, g.tau + 1.0, BlockBase::of(g.b));
    for (const auto& c : P.components())
    {
      double sum = 0.0, half = 0.0;
      for (const auto& [k, v] : c.terms())
      {
        const double t = std::abs(v) * std::pow(k.order(), n);
        r.sup_weighted = std::max(r.sup_weighted, t);
        sum += t;
        if (2 * k.order() <= g.max_order) half += t;
      }
      r.cn_sum = std::max(r.cn_sum, sum);
      r.cn_sum_half = std::max(r.cn_sum_half, half);
    }
    // |p_k| |k|^n ~ |k|^{n - tau - 1 - d}; shells hold ~ m^{n-1} indices
    const double d = g.decay_exponent;
    r.cn_exponent = 2.0 * n - g.tau - 2.0 - d;
    const bool random = !g.forced_mode && g.size != 0.0;
    r.sub_cn = random && r.cn_exponent >= -1.0;
    r.sup_unbounded = random && n - g.tau - 1.0 - d > 0.0;
    r.block_norm_finite = !random || d > 0.5 * n;
    *report = r;
  }
  return P;
}

/// sum_nu Delta_nu eps_nu <= 2 A B eps, which holds once theta b^{tau+1} <= 1/2.
inline BoundReport ledger_sum_check(const std::vector<LedgerEntry>& ledger, const Schedule& sc, double eps)
{
  double acc = 0.0;
  for (std::size_t nu = 0; nu < ledger.size(); ++nu) acc += sc.Delta[nu] * ledger[nu].eps;
  return make_report("sum Delta_nu eps_nu<=2ABeps", acc, 2.0 * sc.A * sc.B * eps);
}

namespace detail
{
inline StepOptions coarse_check()
{
  StepOptions o;
  o.check_grid = 24;
  return o;
}
} // namespace detail

enum class GateKind
{
  none,
  spec,
  strict
};

struct RunOptions
{
  GateKind gate = GateKind::spec;
  PreconditionPolicy policy = PreconditionPolicy::enforce;
  double q_floor_relative = 1e-14;
  int check_grid = 24; ///< points per dimension for the telescoping check; 0 skips it
  StepOptions step = detail::coarse_check(); ///< policy and cap fields are overridden per step
};

/// Snapshot after nu steps: the transform Psi_nu, Y_nu and the measured quantities.
struct ConjugacyState
{
  int nu = 0;
  int K = 0;
  double s = 0.0;
  double Delta = 0.0;      ///< schedule Delta_nu
  double Delta_step = 0.0; ///< 2^n e^{sK} K Omega(K)
  std::vector<double> Y;
  TorusMapField Psi_hat;
  double q_measured = 0.0; ///< |||Q_nu|||_{s_nu}
  double q_zero = 0.0;     ///< |||Q_nu|||_0
  double eps = 0.0;
  double delta = 0.0;
  double dpsi_measured = 0.0; ///< ||D Psi_hat_nu||_{s_nu}
  double y_increment = 0.0;   ///< |Y_{nu+1} - Y_nu|
  double dpsi_increment = 0.0; ///< ||D Psi_{nu+1} - D Psi_nu||_0
  double telescoping_residual = -1.0;
  double telescoping_budget = 0.0;
  BoundReport delta_p; ///< |||Delta P_nu|||_{s_nu} <= (e^r / m_nu) ||Delta P_nu||_m
  BoundReport sd;      ///< combined small-divisor estimate on Pr1 Pi Q_nu with Delta = Delta_step
  bool stepped = false;
};

struct RunFailure
{
  std::string kind; ///< "precondition" or "divergence"
  int nu = 0;
  std::string bound;
  double lhs = 0.0;
  double rhs = 0.0;
  std::string message;
};

struct ConjugacyResult
{
  Schedule schedule;
  std::vector<double> omega;
  TorusMapField P;
  Approximants approx;
  GateReport gates;
  std::vector<LedgerEntry> ledger;
  std::vector<ConjugacyState> states;
  std::vector<StepDiagnostics> steps;
  std::vector<double> Y;
  TorusMapField Psi_hat;
  TorusMapField Q;
  std::string stop_reason;
  std::optional<RunFailure> failure;
  double dropped_mass = 0.0;

  bool ok() const { return !failure.has_value(); }
};

/// Sup over an N^n grid of (P_nu o Psi - Y) - D Psi (w + Q) with w cancelled, by direct summation.
inline double telescoping_residual(const TorusMapField& P_nu, std::span<const double> Y, const TorusMapField& Psi_hat,
                                   const TorusMapField& Q, std::span<const double> omega, int N)
{
  const int n = P_nu.dim();
  TorusGrid grid(n, N);
  const std::size_t G = grid.size();
  const auto pts = grid.points();
  std::vector<FourierSeries> local;
  const TorusMapField dw = del_omega(Psi_hat, omega);
  const JacobianField D = derivative(Psi_hat);
  for (int i = 0; i < n; ++i) local.push_back(Psi_hat[i]);
  for (int i = 0; i < n; ++i) local.push_back(dw[i]);
  for (int i = 0; i < n; ++i) local.push_back(Q[i]);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) local.push_back(D(i, j));
  const auto v = grid.values_at_nodes(local);
  std::vector<double> shifted(pts.begin(), pts.end());
  for (std::size_t p = 0; p < G; ++p)
    for (int j = 0; j < n; ++j) shifted[p * n + j] += v[j][p].real();
  const auto Pv = evaluate_many(P_nu.components(), shifted, n);
  double sup = 0.0;
  for (std::size_t p = 0; p < G; ++p)
    for (int i = 0; i < n; ++i)
    {
      Complex r = Pv[i][p] - Y[i] - v[n + i][p] - v[2 * n + i][p];
      for (int j = 0; j < n; ++j) r -= v[3 * n + i * n + j][p] * v[2 * n + j][p];
      sup = std::max(sup, std::abs(r));
    }
  return sup;
}

/// Runs the iteration on P with frequency omega (already time-normalized).
///
/// Step preconditions and the a-priori gate follow `opt.policy`; violations and
/// divergence are recorded in `failure` instead of being thrown.
inline ConjugacyResult run(const TorusMapField& P, std::span<const double> omega, const Schedule& sc,
                           const RunOptions& opt = {})
{
  const int n = P.dim();
  if (static_cast<int>(omega.size()) != n) throw StructuralError("run: omega dimension mismatch");
  if (sc.n != n) throw StructuralError("run: schedule dimension mismatch");
  if (!P.is_real()) throw PreconditionError("run: perturbation must be real-valued");

  ConjugacyResult res;
  res.schedule = sc;
  res.omega.assign(omega.begin(), omega.end());
  res.P = P;
  res.approx = run_approximants(P, sc);
  res.gates = smallness_gates(res.approx.eps, sc);
  res.ledger = build_ledger(res.approx.rho, sc);
  res.Y.assign(n, 0.0);
  res.Psi_hat = TorusMapField(n);
  res.Q = TorusMapField(n);

  const BoundReport* gate = opt.gate == GateKind::spec     ? &res.gates.spec_gate
                            : opt.gate == GateKind::strict ? &res.gates.strict_gate
                                                           : nullptr;
  if (gate && !gate->holds(0.0) && opt.policy == PreconditionPolicy::enforce)
  {
    res.failure = RunFailure{"precondition", 0, gate->name, gate->lhs, gate->rhs,
                             "perturbation exceeds the smallness gate " + gate->name};
    res.stop_reason = "gate";
    return res;
  }

  std::vector<double> Y(n, 0.0);
  NearIdentityTransform psi = identity_transform(n);
  TorusMapField Q = res.approx.delta[0];
  TorusMapField P_nu = res.approx.delta[0];
  const double q_initial = norm_mean_l2(P, 0.0);
  const PowerWeight w = sc.weight();

  for (int nu = 0;; ++nu)
  {
    ConjugacyState st;
    st.nu = nu;
    st.K = sc.K[nu];
    st.s = sc.s[nu];
    st.Delta = sc.Delta[nu];
    st.Y = Y;
    st.Psi_hat = psi.hat;
    st.q_measured = norm_mean_l2(Q, st.s);
    st.q_zero = norm_mean_l2(Q, 0.0);
    st.eps = res.ledger[nu].eps;
    st.delta = res.ledger[nu].delta;
    st.dpsi_measured = norm_exp(psi.dhat, st.s);
    st.delta_p = delta_p_bound_check(res.approx.delta[nu], st.s, sc.m[nu], sc.r, w);
    if (opt.check_grid > 0)
    {
      st.telescoping_residual = telescoping_residual(P_nu, Y, psi.hat, Q, omega, opt.check_grid);
      double scale = P_nu.l1() + norm_const(Y) + Q.l1() + norm_const(omega) * norm_exp(psi.dhat, 0.0);
      st.telescoping_budget = 4.0 * res.dropped_mass + 1e-13 * scale;
      for (const auto& sd : res.steps) st.telescoping_budget += sd.identity_budget;
    }

    bool rest_zero = true;
    for (int mu = nu + 1; mu <= sc.nu_max; ++mu) rest_zero = rest_zero && res.approx.delta[mu].is_zero();
    if (nu > 0 && st.q_zero <= opt.q_floor_relative * q_initial && rest_zero && res.approx.remainder.is_zero())
    {
      res.states.push_back(std::move(st));
      res.stop_reason = "q_floor";
      break;
    }
    if (nu == sc.nu_max)
    {
      res.states.push_back(std::move(st));
      res.stop_reason = "nu_max";
      break;
    }

    StepOutput out;
    try
    {
      StepInput in = make_step_input(psi, Q, res.omega, st.K, st.s);
      st.Delta_step = in.Delta;
      st.sd = scheme_sd_check(project(Q, st.K, Part::nonconstant_Pr1), res.omega, st.s, st.K, st.K * in.Omega);
      StepOptions so = opt.step;
      so.policy = opt.policy;
      so.cap = 2 * st.K;
      out = solve_step(in, so);
    }
    catch (StepPreconditionError& e)
    {
      res.failure = RunFailure{"precondition", nu, e.bound(), e.lhs(), e.rhs(), e.what()};
      res.states.push_back(std::move(st));
      res.stop_reason = "failure";
      break;
    }
    catch (NonInvertibleError& e)
    {
      res.failure = RunFailure{"precondition", nu, "invertibility", e.mu(), 1.0, e.what()};
      res.states.push_back(std::move(st));
      res.stop_reason = "failure";
      break;
    }
    catch (DivergenceError& e)
    {
      res.failure = RunFailure{"divergence", nu, "contraction", 0.0, 0.0, e.what()};
      res.states.push_back(std::move(st));
      res.stop_reason = "failure";
      break;
    }
    res.dropped_mass += out.diag.dropped_mass;
    st.stepped = true;

    // Y_{nu+1} = Y_nu + Z, Psi_hat_{nu+1} = Psi_hat_nu o Phi + Phi_hat
    const int next_cap = 2 * sc.K[nu + 1];
    for (int i = 0; i < n; ++i) Y[i] += out.Z[i];
    st.y_increment = norm_const(out.Z);
    ComposeOptions co;
    co.output_order = next_cap;
    ComposeReport crep;
    TorusMapField hat = compose(psi.hat, out.Phi_hat, co, &crep) + out.Phi_hat;
    res.dropped_mass += crep.dropped_mass;
    NearIdentityTransform next;
    try
    {
      next = make_transform(hat, sc.s[nu + 1], next_cap);
    }
    catch (NonInvertibleError& e)
    {
      res.failure = RunFailure{"precondition", nu + 1, "invertibility", e.mu(), 1.0, e.what()};
      res.states.push_back(std::move(st));
      res.steps.push_back(std::move(out.diag));
      res.stop_reason = "failure";
      break;
    }
    st.dpsi_increment = norm_exp(next.dhat - psi.dhat, 0.0);
    psi = std::move(next);

    // Q_{nu+1} = Q+ + Psi*_{nu+1} Delta P_{nu+1}
    Q = out.Q_plus;
    const TorusMapField& dP = res.approx.delta[nu + 1];
    if (!dP.is_zero())
    {
      double dropped = 0.0;
      Q += pullback(dP, psi, next_cap, {}, &dropped);
      res.dropped_mass += dropped;
      P_nu += dP;
    }
    res.steps.push_back(std::move(out.diag));
    res.states.push_back(std::move(st));
  }

  res.Y = Y;
  res.Psi_hat = psi.hat;
  res.Q = Q;
  return res;
}

} // namespace kam

#endif
