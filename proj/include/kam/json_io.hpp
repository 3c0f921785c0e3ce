#ifndef KAM_JSON_IO_HPP_
#define KAM_JSON_IO_HPP_

#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kam/verify.hpp"

namespace kam
{

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

namespace detail
{
// JSON has no infinities or NaN; they travel as the strings "inf", "-inf", "nan".
inline Json num(double x)
{
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? Json("inf") : Json("-inf");
}

inline const Json& at(const Json& j, const std::string& key, const std::string& path)
{
  if (!j.is_object()) throw ConfigurationError(path + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ConfigurationError(path + "." + key + ": missing field");
  return *it;
}

inline double get_num(const Json& j, const std::string& path)
{
  if (j.is_number()) return j.get<double>();
  if (j.is_string())
  {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw ConfigurationError(path + ": expected a number");
}

inline double get_num(const Json& j, const std::string& key, const std::string& path)
{
  return get_num(at(j, key, path), path + "." + key);
}

inline int get_int(const Json& j, const std::string& key, const std::string& path)
{
  const Json& v = at(j, key, path);
  if (!v.is_number_integer()) throw ConfigurationError(path + "." + key + ": expected an integer");
  return v.get<int>();
}

inline std::vector<double> get_vec(const Json& j, const std::string& path)
{
  if (!j.is_array()) throw ConfigurationError(path + ": expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_num(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline Json vec(std::span<const double> v)
{
  Json a = Json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

inline void check_schema(const Json& j, const std::string& kind, const std::string& path)
{
  if (!j.is_object()) throw ConfigurationError(path + ": expected an object");
  auto it = j.find("schema_version");
  if (it == j.end()) throw ConfigurationError(path + ".schema_version: missing field");
  if (!it->is_number_integer() || it->get<int>() != kSchemaVersion)
    throw ConfigurationError(path + ".schema_version: unsupported version");
  if (!kind.empty())
  {
    const Json& k = at(j, "kind", path);
    if (!k.is_string() || k.get<std::string>() != kind)
      throw ConfigurationError(path + ".kind: expected \"" + kind + "\"");
  }
}
} // namespace detail

/// {"dim": n, "terms": [{"k": [..], "c": [re, im]}, ...]}; duplicate indices are rejected.
inline Json to_json(const FourierSeries& f)
{
  Json terms = Json::array();
  for (const auto& [k, c] : f.terms())
  {
    Json kk = Json::array();
    for (int i = 0; i < k.dim(); ++i) kk.push_back(k[i]);
    terms.push_back(Json{{"k", kk}, {"c", Json::array({detail::num(c.real()), detail::num(c.imag())})}});
  }
  return Json{{"dim", f.dim()}, {"terms", terms}};
}

inline FourierSeries series_from_json(const Json& j, const std::string& path = "series")
{
  const int n = detail::get_int(j, "dim", path);
  if (n < 1 || n > kMaxDim) throw ConfigurationError(path + ".dim: unsupported dimension");
  const Json& terms = detail::at(j, "terms", path);
  if (!terms.is_array()) throw ConfigurationError(path + ".terms: expected an array");
  std::vector<FourierSeries::Term> out;
  for (std::size_t t = 0; t < terms.size(); ++t)
  {
    const std::string tp = path + ".terms[" + std::to_string(t) + "]";
    const Json& k = detail::at(terms[t], "k", tp);
    if (!k.is_array() || static_cast<int>(k.size()) != n)
      throw ConfigurationError(tp + ".k: expected " + std::to_string(n) + " integers");
    MultiIndex m(n);
    for (int i = 0; i < n; ++i)
    {
      if (!k[i].is_number_integer()) throw ConfigurationError(tp + ".k: expected integers");
      m[i] = k[i].get<int>();
    }
    const auto c = detail::get_vec(detail::at(terms[t], "c", tp), tp + ".c");
    if (c.size() != 2) throw ConfigurationError(tp + ".c: expected [re, im]");
    out.emplace_back(m, Complex(c[0], c[1]));
  }
  try
  {
    return FourierSeries::from_terms(n, std::move(out), true);
  }
  catch (const ConfigurationError& e)
  {
    throw ConfigurationError(path + ": " + e.what());
  }
}

inline Json to_json(const TorusMapField& f)
{
  Json comps = Json::array();
  for (const auto& c : f.components()) comps.push_back(to_json(c));
  return Json{{"dim", f.dim()}, {"components", comps}};
}

inline TorusMapField field_from_json(const Json& j, const std::string& path = "field")
{
  const int n = detail::get_int(j, "dim", path);
  const Json& comps = detail::at(j, "components", path);
  if (!comps.is_array() || static_cast<int>(comps.size()) != n)
    throw ConfigurationError(path + ".components: expected " + std::to_string(n) + " series");
  std::vector<FourierSeries> out;
  for (int i = 0; i < n; ++i)
  {
    out.push_back(series_from_json(comps[i], path + ".components[" + std::to_string(i) + "]"));
    if (out.back().dim() != n) throw ConfigurationError(path + ".components: dimension mismatch");
  }
  return TorusMapField(std::move(out));
}

/// Field file: {"schema_version", "kind": "field", "field": {...}}.
inline Json field_document(const TorusMapField& f)
{
  return Json{{"schema_version", kSchemaVersion}, {"kind", "field"}, {"field", to_json(f)}};
}

inline TorusMapField field_from_document(const Json& j, const std::string& path = "$")
{
  detail::check_schema(j, "field", path);
  return field_from_json(detail::at(j, "field", path), path + ".field");
}

inline Json to_json(const BoundReport& r)
{
  Json params = Json::object();
  for (const auto& [k, v] : r.params) params[k] = detail::num(v);
  return Json{{"name", r.name},
              {"lhs", detail::num(r.lhs)},
              {"rhs", detail::num(r.rhs)},
              {"ratio", detail::num(r.ratio)},
              {"params", params}};
}

inline BoundReport report_from_json(const Json& j, const std::string& path)
{
  BoundReport r;
  const Json& name = detail::at(j, "name", path);
  if (!name.is_string()) throw ConfigurationError(path + ".name: expected a string");
  r.name = name.get<std::string>();
  r.lhs = detail::get_num(j, "lhs", path);
  r.rhs = detail::get_num(j, "rhs", path);
  r.ratio = detail::get_num(j, "ratio", path);
  if (auto it = j.find("params"); it != j.end() && it->is_object())
    for (const auto& [k, v] : it->items()) r.params.emplace_back(k, detail::get_num(v, path + ".params." + k));
  return r;
}

// ---------------------------------------------------------------- config

struct PerturbationSpec
{
  std::optional<std::string> file;
  GeneratorOptions generator;
};

struct VerifyConfig
{
  int grid = 32;
  double t_final = 100.0;
  double integrator_tol = 1e-12;
  std::vector<double> x0;
};

struct RunConfig
{
  int n = 2;
  std::vector<double> omega;
  double tau = 1.0;
  long b = 4;
  double margin = 0.0;
  int nu_max = 6;
  bool normalize = true;
  int alpha_K = 256; ///< orders used to fit alpha when normalizing
  GateKind gate = GateKind::spec;
  PreconditionPolicy policy = PreconditionPolicy::enforce;
  double q_floor_relative = 1e-14;
  PerturbationSpec perturbation;
  VerifyConfig verify;
};

namespace detail
{
inline void reject_unknown(const Json& j, std::initializer_list<const char*> keys, const std::string& path)
{
  for (const auto& [k, v] : j.items())
  {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) throw ConfigurationError(path + "." + k + ": unknown field");
  }
}

inline GateKind parse_gate(const std::string& s, const std::string& path)
{
  if (s == "none") return GateKind::none;
  if (s == "spec") return GateKind::spec;
  if (s == "strict") return GateKind::strict;
  throw ConfigurationError(path + ": expected one of none, spec, strict");
}

inline std::string gate_name(GateKind g)
{
  return g == GateKind::none ? "none" : g == GateKind::spec ? "spec" : "strict";
}

inline PreconditionPolicy parse_policy(const std::string& s, const std::string& path)
{
  if (s == "enforce") return PreconditionPolicy::enforce;
  if (s == "report") return PreconditionPolicy::report;
  throw ConfigurationError(path + ": expected enforce or report");
}

inline std::string policy_name(PreconditionPolicy p)
{
  return p == PreconditionPolicy::enforce ? "enforce" : "report";
}

inline std::string get_str(const Json& j, const std::string& path)
{
  if (!j.is_string()) throw ConfigurationError(path + ": expected a string");
  return j.get<std::string>();
}
} // namespace detail

inline RunConfig config_from_json(const Json& j, const std::string& path = "$")
{
  using namespace detail;
  check_schema(j, "run_config", path);
  reject_unknown(j,
                 {"schema_version", "kind", "n", "omega", "tau", "b", "margin", "nu_max", "normalize", "alpha_K",
                  "gate", "policy", "q_floor_relative", "perturbation", "verify"},
                 path);
  RunConfig c;
  c.n = get_int(j, "n", path);
  if (c.n < 1 || c.n > kMaxDim) throw ConfigurationError(path + ".n: unsupported dimension");
  c.omega = get_vec(at(j, "omega", path), path + ".omega");
  if (static_cast<int>(c.omega.size()) != c.n) throw ConfigurationError(path + ".omega: expected n entries");
  if (j.contains("tau")) c.tau = get_num(j, "tau", path);
  if (j.contains("b")) c.b = get_int(j, "b", path);
  if (j.contains("margin")) c.margin = get_num(j, "margin", path);
  if (j.contains("nu_max")) c.nu_max = get_int(j, "nu_max", path);
  if (j.contains("normalize"))
  {
    if (!j["normalize"].is_boolean()) throw ConfigurationError(path + ".normalize: expected a boolean");
    c.normalize = j["normalize"].get<bool>();
  }
  if (j.contains("alpha_K")) c.alpha_K = get_int(j, "alpha_K", path);
  if (j.contains("gate")) c.gate = parse_gate(get_str(j["gate"], path + ".gate"), path + ".gate");
  if (j.contains("policy")) c.policy = parse_policy(get_str(j["policy"], path + ".policy"), path + ".policy");
  if (j.contains("q_floor_relative")) c.q_floor_relative = get_num(j, "q_floor_relative", path);

  const std::string pp = path + ".perturbation";
  const Json& p = at(j, "perturbation", path);
  if (!p.is_object()) throw ConfigurationError(pp + ": expected an object");
  if (p.contains("file") == p.contains("generator"))
    throw ConfigurationError(pp + ": give exactly one of file, generator");
  reject_unknown(p, {"file", "generator"}, pp);
  if (p.contains("file"))
    c.perturbation.file = get_str(p["file"], pp + ".file");
  else
  {
    const std::string gp = pp + ".generator";
    const Json& g = p["generator"];
    if (!g.is_object()) throw ConfigurationError(gp + ": expected an object");
    reject_unknown(g, {"size", "decay_exponent", "seed", "max_order", "forced_mode"}, gp);
    auto& go = c.perturbation.generator;
    go.n = c.n;
    go.tau = c.tau;
    go.b = c.b;
    go.size = get_num(g, "size", gp);
    if (g.contains("decay_exponent")) go.decay_exponent = get_num(g, "decay_exponent", gp);
    if (g.contains("seed"))
    {
      if (!g["seed"].is_number_unsigned()) throw ConfigurationError(gp + ".seed: expected a nonnegative integer");
      go.seed = g["seed"].get<std::uint64_t>();
    }
    if (g.contains("max_order")) go.max_order = get_int(g, "max_order", gp);
    if (g.contains("forced_mode"))
    {
      const Json& k = g["forced_mode"];
      if (!k.is_array() || static_cast<int>(k.size()) != c.n)
        throw ConfigurationError(gp + ".forced_mode: expected n integers");
      MultiIndex m(c.n);
      for (int i = 0; i < c.n; ++i)
      {
        if (!k[i].is_number_integer()) throw ConfigurationError(gp + ".forced_mode: expected integers");
        m[i] = k[i].get<int>();
      }
      go.forced_mode = m;
    }
  }

  if (j.contains("verify"))
  {
    const std::string vp = path + ".verify";
    const Json& v = j["verify"];
    if (!v.is_object()) throw ConfigurationError(vp + ": expected an object");
    reject_unknown(v, {"grid", "t_final", "integrator_tol", "x0"}, vp);
    if (v.contains("grid")) c.verify.grid = get_int(v, "grid", vp);
    if (v.contains("t_final")) c.verify.t_final = get_num(v, "t_final", vp);
    if (v.contains("integrator_tol")) c.verify.integrator_tol = get_num(v, "integrator_tol", vp);
    if (v.contains("x0")) c.verify.x0 = get_vec(v["x0"], vp + ".x0");
  }
  if (c.verify.x0.empty()) c.verify.x0.assign(c.n, 0.0);
  if (static_cast<int>(c.verify.x0.size()) != c.n) throw ConfigurationError(path + ".verify.x0: expected n entries");
  return c;
}

inline Json to_json(const RunConfig& c)
{
  using namespace detail;
  Json p;
  if (c.perturbation.file)
    p["file"] = *c.perturbation.file;
  else
  {
    const auto& g = c.perturbation.generator;
    Json gj{{"size", num(g.size)},
            {"decay_exponent", num(g.decay_exponent)},
            {"seed", g.seed},
            {"max_order", g.max_order}};
    if (g.forced_mode)
    {
      Json k = Json::array();
      for (int i = 0; i < g.forced_mode->dim(); ++i) k.push_back((*g.forced_mode)[i]);
      gj["forced_mode"] = k;
    }
    p["generator"] = gj;
  }
  return Json{{"schema_version", kSchemaVersion},
              {"kind", "run_config"},
              {"n", c.n},
              {"omega", vec(c.omega)},
              {"tau", num(c.tau)},
              {"b", c.b},
              {"margin", num(c.margin)},
              {"nu_max", c.nu_max},
              {"normalize", c.normalize},
              {"alpha_K", c.alpha_K},
              {"gate", gate_name(c.gate)},
              {"policy", policy_name(c.policy)},
              {"q_floor_relative", num(c.q_floor_relative)},
              {"perturbation", p},
              {"verify",
               Json{{"grid", c.verify.grid},
                    {"t_final", num(c.verify.t_final)},
                    {"integrator_tol", num(c.verify.integrator_tol)},
                    {"x0", vec(c.verify.x0)}}}};
}

// ---------------------------------------------------------------- result

inline Json to_json(const StepDiagnostics& d)
{
  using namespace detail;
  Json pre = Json::array();
  for (const auto& r : d.preconditions) pre.push_back(to_json(r));
  return Json{{"preconditions", pre},
              {"violations", d.violations},
              {"distances", vec(d.distances)},
              {"contraction", vec(d.contraction)},
              {"iterations", d.iterations},
              {"tol", num(d.tol)},
              {"ball", to_json(d.ball)},
              {"q_plus", to_json(d.q_plus)},
              {"dphi", to_json(d.dphi)},
              {"dphi_inverse", to_json(d.dphi_inverse)},
              {"fixed_point_residual", num(d.fixed_point_residual)},
              {"identity_residual", num(d.identity_residual)},
              {"identity_budget", num(d.identity_budget)},
              {"dropped_mass", num(d.dropped_mass)}};
}

inline StepDiagnostics step_diag_from_json(const Json& j, const std::string& path)
{
  using namespace detail;
  StepDiagnostics d;
  const Json& pre = at(j, "preconditions", path);
  if (!pre.is_array()) throw ConfigurationError(path + ".preconditions: expected an array");
  for (std::size_t i = 0; i < pre.size(); ++i)
    d.preconditions.push_back(report_from_json(pre[i], path + ".preconditions[" + std::to_string(i) + "]"));
  for (const auto& v : at(j, "violations", path)) d.violations.push_back(get_str(v, path + ".violations"));
  d.distances = get_vec(at(j, "distances", path), path + ".distances");
  d.contraction = get_vec(at(j, "contraction", path), path + ".contraction");
  d.iterations = get_int(j, "iterations", path);
  d.tol = get_num(j, "tol", path);
  d.ball = report_from_json(at(j, "ball", path), path + ".ball");
  d.q_plus = report_from_json(at(j, "q_plus", path), path + ".q_plus");
  d.dphi = report_from_json(at(j, "dphi", path), path + ".dphi");
  d.dphi_inverse = report_from_json(at(j, "dphi_inverse", path), path + ".dphi_inverse");
  d.fixed_point_residual = get_num(j, "fixed_point_residual", path);
  d.identity_residual = get_num(j, "identity_residual", path);
  d.identity_budget = get_num(j, "identity_budget", path);
  d.dropped_mass = get_num(j, "dropped_mass", path);
  return d;
}

inline Json to_json(const ConjugacyState& st)
{
  using namespace detail;
  Json j{{"nu", st.nu},
         {"K", st.K},
         {"s", num(st.s)},
         {"Delta", num(st.Delta)},
         {"Delta_step", num(st.Delta_step)},
         {"eps", num(st.eps)},
         {"q_measured", num(st.q_measured)},
         {"q_zero", num(st.q_zero)},
         {"delta", num(st.delta)},
         {"dpsi_measured", num(st.dpsi_measured)},
         {"y_increment", num(st.y_increment)},
         {"dpsi_increment", num(st.dpsi_increment)},
         {"telescoping_residual", num(st.telescoping_residual)},
         {"telescoping_budget", num(st.telescoping_budget)},
         {"stepped", st.stepped},
         {"Y", vec(st.Y)},
         {"Psi_hat", to_json(st.Psi_hat)}};
  if (!st.delta_p.name.empty()) j["delta_p"] = to_json(st.delta_p);
  if (!st.sd.name.empty()) j["sd"] = to_json(st.sd);
  return j;
}

inline ConjugacyState state_from_json(const Json& j, const std::string& path)
{
  using namespace detail;
  ConjugacyState st;
  st.nu = get_int(j, "nu", path);
  st.K = get_int(j, "K", path);
  st.s = get_num(j, "s", path);
  st.Delta = get_num(j, "Delta", path);
  st.Delta_step = get_num(j, "Delta_step", path);
  st.eps = get_num(j, "eps", path);
  st.q_measured = get_num(j, "q_measured", path);
  st.q_zero = get_num(j, "q_zero", path);
  st.delta = get_num(j, "delta", path);
  st.dpsi_measured = get_num(j, "dpsi_measured", path);
  st.y_increment = get_num(j, "y_increment", path);
  st.dpsi_increment = get_num(j, "dpsi_increment", path);
  st.telescoping_residual = get_num(j, "telescoping_residual", path);
  st.telescoping_budget = get_num(j, "telescoping_budget", path);
  const Json& stepped = at(j, "stepped", path);
  if (!stepped.is_boolean()) throw ConfigurationError(path + ".stepped: expected a boolean");
  st.stepped = stepped.get<bool>();
  st.Y = get_vec(at(j, "Y", path), path + ".Y");
  st.Psi_hat = field_from_json(at(j, "Psi_hat", path), path + ".Psi_hat");
  if (j.contains("delta_p")) st.delta_p = report_from_json(j["delta_p"], path + ".delta_p");
  if (j.contains("sd")) st.sd = report_from_json(j["sd"], path + ".sd");
  return st;
}

inline Json to_json(const Schedule& sc)
{
  using namespace detail;
  return Json{{"n", sc.n},         {"tau", num(sc.tau)},     {"b", sc.b},           {"margin", num(sc.margin)},
              {"r", num(sc.r)},    {"theta", num(sc.theta)}, {"B", num(sc.B)},      {"A", num(sc.A)},
              {"nu_max", sc.nu_max}, {"warnings", sc.warnings}};
}

/// Result document. `extra` (config echo, generator report) is stored verbatim.
inline Json result_document(const ConjugacyResult& res, const Json& extra = Json::object())
{
  using namespace detail;
  Json states = Json::array();
  for (const auto& st : res.states) states.push_back(to_json(st));
  Json steps = Json::array();
  for (const auto& d : res.steps) steps.push_back(to_json(d));
  Json ledger = Json::array();
  for (const auto& e : res.ledger) ledger.push_back(Json{{"eps", num(e.eps)}, {"delta", num(e.delta)}});
  Json j{{"schema_version", kSchemaVersion},
         {"kind", "result"},
         {"ok", res.ok()},
         {"stop_reason", res.stop_reason},
         {"schedule", to_json(res.schedule)},
         {"omega", vec(res.omega)},
         {"eps", num(res.approx.eps)},
         {"rho", vec(res.approx.rho)},
         {"gates", Json{{"spec", to_json(res.gates.spec_gate)}, {"strict", to_json(res.gates.strict_gate)}}},
         {"ledger", ledger},
         {"dropped_mass", num(res.dropped_mass)},
         {"Y", vec(res.Y)},
         {"Psi_hat", to_json(res.Psi_hat)},
         {"Q", to_json(res.Q)},
         {"P", to_json(res.P)},
         {"states", states},
         {"steps", steps}};
  if (res.failure)
  {
    const auto& f = *res.failure;
    j["failure"] = Json{{"kind", f.kind},   {"nu", f.nu},         {"bound", f.bound},
                        {"lhs", num(f.lhs)}, {"rhs", num(f.rhs)}, {"message", f.message}};
  }
  else
    j["failure"] = nullptr;
  j["extra"] = extra;
  return j;
}

/// Rebuilds a result; the schedule and approximants are recomputed from the stored inputs.
inline ConjugacyResult result_from_document(const Json& j, const std::string& path = "$")
{
  using namespace detail;
  check_schema(j, "result", path);
  ConjugacyResult res;
  const Json& sj = at(j, "schedule", path);
  const std::string sp = path + ".schedule";
  res.schedule = build_schedule(get_int(sj, "n", sp), get_num(sj, "tau", sp), get_int(sj, "b", sp),
                                get_num(sj, "margin", sp), get_int(sj, "nu_max", sp));
  res.omega = get_vec(at(j, "omega", path), path + ".omega");
  res.P = field_from_json(at(j, "P", path), path + ".P");
  res.approx = run_approximants(res.P, res.schedule);
  res.gates = smallness_gates(res.approx.eps, res.schedule);
  res.ledger = build_ledger(res.approx.rho, res.schedule);
  res.dropped_mass = get_num(j, "dropped_mass", path);
  res.Y = get_vec(at(j, "Y", path), path + ".Y");
  res.Psi_hat = field_from_json(at(j, "Psi_hat", path), path + ".Psi_hat");
  res.Q = field_from_json(at(j, "Q", path), path + ".Q");
  res.stop_reason = get_str(at(j, "stop_reason", path), path + ".stop_reason");
  const Json& states = at(j, "states", path);
  for (std::size_t i = 0; i < states.size(); ++i)
    res.states.push_back(state_from_json(states[i], path + ".states[" + std::to_string(i) + "]"));
  const Json& steps = at(j, "steps", path);
  for (std::size_t i = 0; i < steps.size(); ++i)
    res.steps.push_back(step_diag_from_json(steps[i], path + ".steps[" + std::to_string(i) + "]"));
  const Json& f = at(j, "failure", path);
  if (!f.is_null())
  {
    const std::string fp = path + ".failure";
    res.failure = RunFailure{get_str(at(f, "kind", fp), fp + ".kind"), get_int(f, "nu", fp),
                             get_str(at(f, "bound", fp), fp + ".bound"), get_num(f, "lhs", fp), get_num(f, "rhs", fp),
                             get_str(at(f, "message", fp), fp + ".message")};
  }
  return res;
}

/// Per-state ledger and step diagnostics, one row per nu.
inline std::string ledger_csv(const ConjugacyResult& res)
{
  std::ostringstream os;
  os << std::setprecision(17);
  os << "# schema_version=" << kSchemaVersion << "\n";
  os << "nu,K,s,Delta,Delta_step,eps,q_measured,delta,dpsi_measured,y_increment,dpsi_increment,"
        "telescoping_residual,telescoping_budget,iterations,max_contraction,identity_residual,identity_budget\n";
  for (const auto& st : res.states)
  {
    os << st.nu << ',' << st.K << ',' << st.s << ',' << st.Delta << ',' << st.Delta_step << ',' << st.eps << ','
       << st.q_measured << ',' << st.delta << ',' << st.dpsi_measured << ',' << st.y_increment << ','
       << st.dpsi_increment << ',' << st.telescoping_residual << ',' << st.telescoping_budget;
    if (st.stepped && st.nu < static_cast<int>(res.steps.size()))
    {
      const auto& d = res.steps[st.nu];
      os << ',' << d.iterations << ',' << d.max_contraction() << ',' << d.identity_residual << ','
         << d.identity_budget;
    }
    else
      os << ",,,,";
    os << '\n';
  }
  return os.str();
}

inline Json to_json(const AuditReport& a)
{
  Json rows = Json::array();
  for (const auto& r : a.rows)
    rows.push_back(Json{{"lemma", r.lemma},
                        {"nu", r.nu},
                        {"lhs", detail::num(r.lhs)},
                        {"rhs", detail::num(r.rhs)},
                        {"ratio", detail::num(r.ratio)},
                        {"pass", r.pass},
                        {"gating", r.gating}});
  return Json{{"schema_version", kSchemaVersion},
              {"kind", "audit"},
              {"pass", a.pass},
              {"failures", a.failures},
              {"tolerance", kAuditTolerance},
              {"rows", rows}};
}

inline Json read_json_file(const std::string& file);

inline Json to_json(const GeneratorReport& g)
{
  using detail::num;
  return Json{{"block_norm", num(g.block_norm)},       {"sup_weighted", num(g.sup_weighted)},
              {"cn_sum", num(g.cn_sum)},               {"cn_sum_half", num(g.cn_sum_half)},
              {"cn_exponent", num(g.cn_exponent)},     {"sub_cn", g.sub_cn},
              {"sup_unbounded", g.sup_unbounded},      {"block_norm_finite", g.block_norm_finite}};
}

struct ConfigRun
{
  FrequencyData frequency;
  TorusMapField P;
  std::optional<GeneratorReport> generator;
  ConjugacyResult result;
  Json document;
};

/// Builds the perturbation, frequency and schedule from a config and runs the scheme.
///
/// With `normalize` the frequency becomes w / alpha (alpha fitted on |k| <= alpha_K)
/// and the perturbation is taken relative to that normalized field.
inline ConfigRun execute_config(const RunConfig& c, const std::string& base_dir = ".")
{
  ConfigRun out;
  if (c.perturbation.file)
  {
    std::string file = *c.perturbation.file;
    if (!file.empty() && file[0] != '/') file = base_dir + "/" + file;
    out.P = field_from_document(read_json_file(file), file);
    if (out.P.dim() != c.n) throw ConfigurationError("perturbation.file: dimension differs from n");
  }
  else
  {
    GeneratorReport g;
    out.P = generate_perturbation(c.perturbation.generator, &g);
    out.generator = g;
  }
  if (c.normalize)
    out.frequency = normalize_time(estimate_alpha_tau(c.omega, c.alpha_K, c.tau));
  else
  {
    out.frequency.omega = c.omega;
    out.frequency.tau = c.tau;
    out.frequency.alpha = 1.0;
  }
  const Schedule sc = build_schedule(c.n, c.tau, c.b, c.margin, c.nu_max);
  RunOptions ro;
  ro.gate = c.gate;
  ro.policy = c.policy;
  ro.q_floor_relative = c.q_floor_relative;
  out.result = run(out.P, out.frequency.omega, sc, ro);
  Json extra{{"config", to_json(c)},
             {"frequency", Json{{"omega_input", detail::vec(c.omega)},
                                {"omega", detail::vec(out.frequency.omega)},
                                {"normalized", c.normalize}}}};
  if (out.generator) extra["generator"] = to_json(*out.generator);
  out.document = result_document(out.result, extra);
  return out;
}

inline Json read_json_file(const std::string& file)
{
  std::ifstream in(file);
  if (!in) throw ConfigurationError(file + ": cannot open");
  try
  {
    return Json::parse(in);
  }
  catch (const Json::parse_error& e)
  {
    throw ConfigurationError(file + ": " + e.what());
  }
}

inline void write_text_file(const std::string& file, const std::string& text)
{
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ConfigurationError(file + ": cannot write");
  out << text;
  if (!out) throw ConfigurationError(file + ": write failed");
}

inline void write_json_file(const std::string& file, const Json& j) { write_text_file(file, j.dump(1) + "\n"); }

} // namespace kam

#endif
