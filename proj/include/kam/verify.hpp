#ifndef KAM_VERIFY_HPP_
#define KAM_VERIFY_HPP_

#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "kam/scheme.hpp"

namespace kam
{

struct ResidualReport
{
  double sup = 0.0;
  double mean = 0.0;
  int grid_points = 0; ///< per dimension
};

/// R(x) = P(x + Psi_hat(x)) - Y - D Psi_hat(x) w on the grid x_j + shift, all by
/// direct summation of the stored series. The w terms cancel exactly and are not formed.
inline ResidualReport conjugacy_residual(std::span<const double> Y, const TorusMapField& Psi_hat, const TorusMapField& P,
                                         std::span<const double> omega, int N, std::span<const double> shift = {})
{
  const int n = P.dim();
  if (Psi_hat.dim() != n || static_cast<int>(Y.size()) != n || static_cast<int>(omega.size()) != n)
    throw StructuralError("conjugacy_residual: dimension mismatch");
  if (N < 1) throw ConfigurationError("conjugacy_residual: grid needs at least one point");
  if (!shift.empty() && static_cast<int>(shift.size()) != n)
    throw StructuralError("conjugacy_residual: shift dimension mismatch");
  TorusGrid grid(n, N);
  std::vector<double> pts = grid.points();
  if (!shift.empty())
    for (std::size_t p = 0; p < grid.size(); ++p)
      for (int j = 0; j < n; ++j) pts[p * n + j] += shift[j];

  std::vector<FourierSeries> local;
  const TorusMapField dw = del_omega(Psi_hat, omega);
  for (int i = 0; i < n; ++i) local.push_back(Psi_hat[i]);
  for (int i = 0; i < n; ++i) local.push_back(dw[i]);
  const auto v = evaluate_many(local, pts, n);
  std::vector<double> moved(pts);
  for (std::size_t p = 0; p < grid.size(); ++p)
    for (int j = 0; j < n; ++j) moved[p * n + j] += v[j][p].real();
  const auto Pv = evaluate_many(P.components(), moved, n);

  ResidualReport rep;
  rep.grid_points = N;
  double acc = 0.0;
  for (std::size_t p = 0; p < grid.size(); ++p)
  {
    double worst = 0.0;
    for (int i = 0; i < n; ++i) worst = std::max(worst, std::abs(Pv[i][p].real() - Y[i] - v[n + i][p].real()));
    rep.sup = std::max(rep.sup, worst);
    acc += worst;
  }
  rep.mean = acc / static_cast<double>(grid.size());
  return rep;
}

/// Bound on sup|R| for the final state: the telescoping budget, plus D Psi Q, plus
/// the part of P above the last cutoff, all in sup via l1 sums.
inline double residual_budget(const ConjugacyResult& res)
{
  if (res.states.empty()) return 0.0;
  const ConjugacyState& last = res.states.back();
  TorusMapField P_nu(res.P.dim());
  for (int mu = 0; mu <= last.nu && mu < static_cast<int>(res.approx.delta.size()); ++mu)
    P_nu += res.approx.delta[mu];
  const double tail = (res.P - P_nu).l1();
  const double dpsi = norm_exp(derivative(res.Psi_hat), 0.0);
  return std::max(last.telescoping_budget, 0.0) + (1.0 + dpsi) * res.Q.l1() + tail;
}

/// Evaluates a real field at single points with per-dimension character tables.
class PointEvaluator
{
public:
  explicit PointEvaluator(const TorusMapField& f) : n_(f.dim())
  {
    M_ = f.max_component();
    for (int i = 0; i < n_; ++i)
    {
      for (const auto& [k, c] : f[i].terms())
      {
        // real field: sum over the positive half and double, plus the mean
        if (k.is_zero())
          mean_[i] += c.real();
        else if (k.is_positive_half())
        {
          comp_.push_back(i);
          coeff_.push_back(2.0 * c);
          for (int j = 0; j < n_; ++j) index_.push_back(k[j] + M_);
        }
      }
    }
    table_.resize(static_cast<std::size_t>(n_) * (2 * M_ + 1));
  }

  void operator()(const double* x, double* out)
  {
    const int width = 2 * M_ + 1;
    for (int j = 0; j < n_; ++j)
    {
      Complex* t = table_.data() + static_cast<std::size_t>(j) * width;
      t[M_] = 1.0;
      for (int m = 1; m <= M_; ++m)
      {
        // exact polar values keep the table free of recurrence drift
        t[M_ + m] = std::polar(1.0, m * x[j]);
        t[M_ - m] = std::conj(t[M_ + m]);
      }
    }
    for (int i = 0; i < n_; ++i) out[i] = mean_[i];
    for (std::size_t q = 0; q < coeff_.size(); ++q)
    {
      Complex e = table_[index_[q * n_]];
      for (int j = 1; j < n_; ++j) e *= table_[static_cast<std::size_t>(j) * width + index_[q * n_ + j]];
      out[comp_[q]] += (coeff_[q] * e).real();
    }
  }

private:
  int n_;
  int M_ = 0;
  std::array<double, kMaxDim> mean_{};
  std::vector<int> comp_;
  std::vector<Complex> coeff_;
  std::vector<int> index_;
  std::vector<Complex> table_;
};

struct OrbitReport
{
  double max_distance = 0.0;
  double t_final = 0.0;
  double tol = 0.0;
  int samples = 0;
  std::size_t steps = 0;
};

/// Largest per-coordinate distance on the torus, taking the shorter arc.
inline double torus_distance(std::span<const double> a, std::span<const double> b)
{
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j)
  {
    const double r = std::remainder(a[j] - b[j], 2.0 * std::numbers::pi);
    d = std::max(d, std::fabs(r));
  }
  return d;
}

/// Integrates x' = w + P(x) - Y from Psi(x0) and compares with Psi(x0 + w t) at
/// `samples` equally spaced times in (0, t_final].
inline OrbitReport orbit_conjugacy_check(std::span<const double> Y, const TorusMapField& Psi_hat, const TorusMapField& P,
                                         std::span<const double> omega, std::span<const double> x0, double t_final,
                                         double tol, int samples = 100)
{
  namespace odeint = boost::numeric::odeint;
  const int n = P.dim();
  if (static_cast<int>(x0.size()) != n || static_cast<int>(omega.size()) != n || static_cast<int>(Y.size()) != n)
    throw StructuralError("orbit_conjugacy_check: dimension mismatch");
  if (!(t_final > 0.0) || !(tol > 0.0) || samples < 1)
    throw ConfigurationError("orbit_conjugacy_check: need t_final > 0, tol > 0 and samples >= 1");
  using State = std::vector<double>;
  PointEvaluator field(P);
  PointEvaluator psi(Psi_hat);
  std::vector<double> buf(n);
  auto rhs = [&](const State& x, State& dx, double) {
    field(x.data(), buf.data());
    for (int i = 0; i < n; ++i) dx[i] = omega[i] + buf[i] - Y[i];
  };
  auto conj = [&](const State& x) {
    State out(x);
    psi(x.data(), buf.data());
    for (int i = 0; i < n; ++i) out[i] += buf[i];
    return out;
  };

  OrbitReport rep;
  rep.t_final = t_final;
  rep.tol = tol;
  rep.samples = samples;
  State x(x0.begin(), x0.end());
  x = conj(x);
  std::vector<double> times;
  for (int i = 0; i <= samples; ++i) times.push_back(t_final * i / samples);
  auto stepper = odeint::make_dense_output(tol, tol, odeint::runge_kutta_dopri5<State>());
  std::size_t count = 0;
  auto observe = [&](const State& xt, double t) {
    State lin(x0.begin(), x0.end());
    for (int i = 0; i < n; ++i) lin[i] += omega[i] * t;
    for (double v : xt)
      if (!std::isfinite(v)) throw IntegratorError("orbit_conjugacy_check: state became non-finite");
    rep.max_distance = std::max(rep.max_distance, torus_distance(xt, conj(lin)));
  };
  count = odeint::integrate_times(stepper, rhs, x, times.begin(), times.end(), t_final / samples, observe);
  rep.steps = count;
  return rep;
}

struct AuditRow
{
  std::string lemma;
  int nu = -1;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  bool pass = true;
  bool gating = true; ///< informational rows do not affect the overall verdict
};

struct AuditReport
{
  std::vector<AuditRow> rows;
  bool pass = true;
  int failures = 0;
};

inline constexpr double kAuditTolerance = 1e-9;

/// Every inequality instance recorded by a run, completed or failed.
inline AuditReport lemma_audit(const ConjugacyResult& res, GateKind gate = GateKind::spec)
{
  AuditReport a;
  auto add = [&](const BoundReport& r, int nu, bool gating, const std::string& prefix = "") {
    AuditRow row{prefix + r.name, nu, r.lhs, r.rhs, r.ratio, r.holds(kAuditTolerance), gating};
    a.rows.push_back(row);
  };
  add(res.gates.spec_gate, -1, gate == GateKind::spec, "gate:");
  add(res.gates.strict_gate, -1, gate == GateKind::strict, "gate:");
  add(ledger_sum_check(res.ledger, res.schedule, res.approx.eps), -1, true, "ledger:");

  for (const auto& st : res.states)
  {
    add(make_report("|||Q|||_s<=eps", st.q_measured, st.eps), st.nu, true, "ledger:");
    add(make_report("||DPsi_hat||_s<=delta", st.dpsi_measured, st.delta), st.nu, true, "ledger:");
    if (!st.delta_p.name.empty()) add(st.delta_p, st.nu, true, "norms:");
    if (!st.sd.name.empty()) add(st.sd, st.nu, true, "smalldiv:");
    if (st.telescoping_residual >= 0.0)
      add(make_report("telescoping<=budget", st.telescoping_residual, st.telescoping_budget), st.nu, true, "scheme:");
    if (st.stepped)
    {
      add(make_report("|Y+-Y|<=4eps", st.y_increment, 4.0 * st.eps), st.nu, true, "cauchy:");
      add(make_report("||DPsi+-DPsi||_0<=8Delta eps", st.dpsi_increment, 8.0 * st.Delta * st.eps), st.nu, true,
          "cauchy:");
    }
  }
  for (std::size_t nu = 0; nu < res.steps.size(); ++nu)
  {
    const auto& d = res.steps[nu];
    const int v = static_cast<int>(nu);
    for (const auto& p : d.preconditions) add(p, v, p.name != "sK>=(4/3)^(n/2)", "step:");
    add(make_report("contraction<=0.55", d.max_contraction(), 0.55), v, true, "step:");
    add(d.ball, v, true, "step:");
    add(d.q_plus, v, false, "step:");
    add(d.dphi, v, true, "step:");
    add(d.dphi_inverse, v, true, "step:");
    add(make_report("fixed_point_residual<=2tol", d.fixed_point_residual, 2.0 * d.tol), v, true, "step:");
    add(make_report("identity_residual<=budget", d.identity_residual, d.identity_budget), v, true, "step:");
  }
  if (res.failure)
  {
    const auto& f = *res.failure;
    AuditRow row{"failure:" + f.kind + ":" + f.bound, f.nu, f.lhs, f.rhs, bound_ratio(f.lhs, f.rhs), false, true};
    a.rows.push_back(row);
  }
  for (const auto& r : a.rows)
    if (r.gating && !r.pass)
    {
      a.pass = false;
      ++a.failures;
    }
  return a;
}

} // namespace kam

#endif
