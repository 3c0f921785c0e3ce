#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "kam/json_io.hpp"

using namespace kam;

namespace
{

enum Exit
{
  kOk = 0,
  kUsage = 1,
  kPrecondition = 2,
  kDivergence = 3,
  kCheckFailed = 4,
};

struct Globals
{
  std::string config;
  std::string out;
  int threads = 1;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
};

void emit(const Json& j, const std::string& out)
{
  if (out.empty() || out == "-")
    std::cout << j.dump(1) << "\n";
  else
    write_json_file(out, j);
}

std::string dir_of(const std::string& file)
{
  const auto p = std::filesystem::path(file).parent_path();
  return p.empty() ? "." : p.string();
}

RunConfig load_config(const Globals& g)
{
  if (g.config.empty()) throw ConfigurationError("--config: required");
  RunConfig c = config_from_json(read_json_file(g.config));
  if (g.seed) c.perturbation.generator.seed = *g.seed;
  return c;
}

int cmd_frequency(const Globals& g, std::vector<double> omega, double tau, int K)
{
  if (omega.empty())
  {
    const RunConfig c = load_config(g);
    omega = c.omega;
    tau = c.tau;
  }
  const FrequencyData fd = estimate_alpha_tau(omega, K, tau);
  const FrequencyData nd = normalize_time(fd);
  Json table = Json::object();
  for (int k = 1; k <= K; k *= 2)
  {
    MultiIndex arg;
    const double v = omega_max(omega, k, &arg);
    table[std::to_string(k)] = Json{{"Omega", v}, {"argmin", arg.str()}};
  }
  Json ruessmann = Json::array();
  for (int k = 4; k <= std::min(K, 64); k *= 2) ruessmann.push_back(to_json(ruessmann_sum_check(omega, k)));
  Json j{{"schema_version", kSchemaVersion},
         {"kind", "frequency"},
         {"omega", detail::vec(omega)},
         {"tau", tau},
         {"K_max", K},
         {"alpha", fd.alpha},
         {"omega_normalized", detail::vec(nd.omega)},
         {"Omega", table},
         {"ruessmann", ruessmann}};
  emit(j, g.out);
  return kOk;
}

int cmd_norms(const Globals& g, const std::string& file, double s, double r)
{
  const TorusMapField f = field_from_document(read_json_file(file), file);
  Json blocks = Json::object();
  bool zero_mean = true;
  for (const auto& c : f.components()) zero_mean = zero_mean && std::abs(c.mean()) == 0.0;
  if (zero_mean)
  {
    blocks["1"] = norm_block(f, r, BlockBase::one());
    for (long b : {2L, 4L, 16L}) blocks[std::to_string(b)] = norm_block(f, r, BlockBase::of(b));
    blocks["inf"] = norm_block(f, r, BlockBase::infinity());
  }
  Json j{{"schema_version", kSchemaVersion},
         {"kind", "norms"},
         {"file", file},
         {"s", s},
         {"r", r},
         {"order", f.order()},
         {"exp_l1", norm_exp(f, s)},
         {"mean_l2", norm_mean_l2(f, s)},
         {"exp_l1_dual", norm_exp_dual(f, s)},
         {"jacobian_exp", norm_exp(derivative(f), s)},
         {"m_norm", norm_m(f, PowerWeight{r})},
         {"block", zero_mean ? blocks : Json(nullptr)}};
  emit(j, g.out);
  return kOk;
}

int cmd_perturb(const Globals& g, const std::string& report_file)
{
  const RunConfig c = load_config(g);
  if (c.perturbation.file) throw ConfigurationError("perturbation: generate needs generator parameters");
  GeneratorReport rep;
  const TorusMapField P = generate_perturbation(c.perturbation.generator, &rep);
  Json doc = field_document(P);
  doc["generator"] = to_json(rep);
  emit(doc, g.out);
  if (!report_file.empty()) write_json_file(report_file, to_json(rep));
  if (g.verbose)
    std::cerr << "block norm " << rep.block_norm << ", sub-C^n coefficient decay: " << (rep.sub_cn ? "yes" : "no")
              << "\n";
  return kOk;
}

int cmd_run(const Globals& g, std::string ledger)
{
  const RunConfig c = load_config(g);
  const ConfigRun cr = execute_config(c, dir_of(g.config));
  const std::string out = g.out.empty() ? "result.json" : g.out;
  emit(cr.document, out);
  if (ledger.empty() && out != "-") ledger = std::filesystem::path(out).replace_extension(".csv").string();
  if (!ledger.empty()) write_text_file(ledger, ledger_csv(cr.result));
  const auto& res = cr.result;
  if (g.verbose)
    for (const auto& st : res.states)
      std::cerr << "nu " << st.nu << " K " << st.K << " |||Q||| " << st.q_measured << " eps " << st.eps << "\n";
  if (res.failure)
  {
    const auto& f = *res.failure;
    std::cerr << "kam run: " << f.kind << " failure at nu = " << f.nu << ": " << f.bound << " (" << f.lhs
              << " > " << f.rhs << ")\n";
    return f.kind == "divergence" ? kDivergence : kPrecondition;
  }
  std::cerr << "kam run: ok, stopped by " << res.stop_reason << " after " << res.steps.size() << " steps\n";
  return kOk;
}

int cmd_verify(const Globals& g, const std::string& result_file, int grid, double t_final, double tol,
               double orbit_limit)
{
  const Json doc = read_json_file(result_file);
  const ConjugacyResult res = result_from_document(doc, result_file);
  if (res.failure) throw ConfigurationError(result_file + ": the run failed; nothing to verify");
  std::vector<double> x0(res.P.dim(), 0.0);
  if (auto it = doc.find("extra"); it != doc.end() && it->contains("config"))
  {
    const RunConfig c = config_from_json((*it)["config"], result_file + ".extra.config");
    if (grid <= 0) grid = c.verify.grid;
    if (t_final <= 0) t_final = c.verify.t_final;
    if (tol <= 0) tol = c.verify.integrator_tol;
    x0 = c.verify.x0;
  }
  if (grid <= 0) grid = 32;
  if (t_final <= 0) t_final = 100.0;
  if (tol <= 0) tol = 1e-12;

  const ResidualReport rr = conjugacy_residual(res.Y, res.Psi_hat, res.P, res.omega, grid);
  const double budget = residual_budget(res);
  Json intermediate = Json::array();
  bool monotone = true;
  double prev = kInf;
  for (const auto& st : res.states)
  {
    const double sup = conjugacy_residual(st.Y, st.Psi_hat, res.P, res.omega, grid).sup;
    intermediate.push_back(Json{{"nu", st.nu}, {"sup", sup}});
    monotone = monotone && sup <= prev;
    prev = sup;
  }
  const OrbitReport orb = orbit_conjugacy_check(res.Y, res.Psi_hat, res.P, res.omega, x0, t_final, tol);
  const bool residual_ok = rr.sup <= 1e3 * budget;
  const bool orbit_ok = orb.max_distance <= orbit_limit;
  const bool pass = residual_ok && orbit_ok && monotone;
  Json j{{"schema_version", kSchemaVersion},
         {"kind", "verify"},
         {"pass", pass},
         {"residual", Json{{"sup", rr.sup}, {"mean", rr.mean}, {"grid", grid}, {"budget", budget}, {"pass", residual_ok}}},
         {"intermediate", intermediate},
         {"monotone", monotone},
         {"orbit",
          Json{{"max_distance", orb.max_distance},
               {"t_final", orb.t_final},
               {"tol", orb.tol},
               {"steps", orb.steps},
               {"limit", orbit_limit},
               {"pass", orbit_ok}}}};
  emit(j, g.out);
  std::cerr << "kam verify: sup|R| = " << rr.sup << " (budget x 1e3 = " << 1e3 * budget << "), orbit distance "
            << orb.max_distance << (pass ? ", pass\n" : ", FAIL\n");
  return pass ? kOk : kCheckFailed;
}

int cmd_audit(const Globals& g, const std::string& result_file, std::string gate)
{
  const Json doc = read_json_file(result_file);
  const ConjugacyResult res = result_from_document(doc, result_file);
  GateKind kind = GateKind::spec;
  if (gate.empty())
  {
    if (auto it = doc.find("extra"); it != doc.end() && it->contains("config"))
      kind = config_from_json((*it)["config"], result_file + ".extra.config").gate;
  }
  else
    kind = detail::parse_gate(gate, "--gate");
  const AuditReport a = lemma_audit(res, kind);
  emit(to_json(a), g.out);
  if (g.verbose)
    for (const auto& r : a.rows)
      if (!r.pass) std::cerr << (r.gating ? "FAIL " : "info ") << r.lemma << " nu " << r.nu << " ratio " << r.ratio << "\n";
  std::cerr << "kam audit: " << a.rows.size() << " rows, " << a.failures << " failing" << (a.pass ? ", pass\n" : "\n");
  return a.pass ? kOk : kCheckFailed;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"KAM conjugacy engine"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "run config JSON");
  app.add_option("--out", g.out, "output file ('-' for stdout)");
  app.add_option("--threads", g.threads, "worker threads (computation is sequential; accepted for compatibility)")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "override the generator seed");
  app.add_flag("--verbose,-v", g.verbose, "progress on stderr");

  auto* freq = app.add_subcommand("frequency", "diophantine analysis of a frequency vector");
  auto* analyze = freq->add_subcommand("analyze", "Omega(K), alpha fit and the Ruessmann sums");
  freq->require_subcommand(1);
  std::vector<double> omega;
  double tau = 1.0;
  int K = 256;
  analyze->add_option("--omega", omega, "frequency vector")->delimiter(',');
  analyze->add_option("--tau", tau, "diophantine exponent");
  analyze->add_option("--K", K, "largest order")->check(CLI::PositiveNumber);

  auto* norms = app.add_subcommand("norms", "all norms of a field file");
  std::string series_file;
  double s = 0.5, r = 2.0;
  norms->add_option("file", series_file, "field JSON")->required();
  norms->add_option("--s", s, "strip width");
  norms->add_option("--r", r, "power weight exponent");

  auto* perturb = app.add_subcommand("perturb", "perturbation fixtures");
  auto* generate = perturb->add_subcommand("generate", "generate P from the config's generator block");
  perturb->require_subcommand(1);
  std::string report_file;
  generate->add_option("--report", report_file, "write the generator report here");

  auto* run = app.add_subcommand("run", "run the iteration");
  std::string ledger;
  run->add_option("--ledger", ledger, "per-step CSV (default: next to --out)");

  auto* verify = app.add_subcommand("verify", "conjugacy residual and orbit check of a result");
  std::string result_file;
  int grid = 0;
  double t_final = 0.0, tol = 0.0, orbit_limit = 1e-6;
  verify->add_option("--result", result_file, "result JSON")->required();
  verify->add_option("--grid", grid, "grid points per dimension");
  verify->add_option("--t-final", t_final, "orbit length");
  verify->add_option("--tol", tol, "integrator tolerance");
  verify->add_option("--orbit-limit", orbit_limit, "largest accepted orbit distance");

  auto* audit = app.add_subcommand("audit", "inequality table of a result");
  std::string gate;
  audit->add_option("--result", result_file, "result JSON")->required();
  audit->add_option("--gate", gate, "gate that counts: none, spec, strict (default: from the run config)");

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError& e)
  {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try
  {
    if (*analyze) return cmd_frequency(g, omega, tau, K);
    if (*norms) return cmd_norms(g, series_file, s, r);
    if (*generate) return cmd_perturb(g, report_file);
    if (*run) return cmd_run(g, ledger);
    if (*verify) return cmd_verify(g, result_file, grid, t_final, tol, orbit_limit);
    if (*audit) return cmd_audit(g, result_file, gate);
  }
  catch (const StepPreconditionError& e)
  {
    std::cerr << "kam: precondition violated at nu = " << e.nu() << ": " << e.what() << "\n";
    return kPrecondition;
  }
  catch (const DivergenceError& e)
  {
    std::cerr << "kam: " << e.what() << "\n";
    return kDivergence;
  }
  catch (const PreconditionError& e)
  {
    std::cerr << "kam: " << e.what() << "\n";
    return kPrecondition;
  }
  catch (const ResonanceError& e)
  {
    std::cerr << "kam: " << e.what() << "\n";
    return kPrecondition;
  }
  catch (const Error& e)
  {
    std::cerr << "kam: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
