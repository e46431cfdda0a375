// Experiment driver: heteroclinic | toda | build-approx | solve | saddle |
// diagnose | sweep | uniqueness-echo.

#include <openssl/evp.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fourend/fourend.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fourend;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitDiagnostic = 4;

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot hash " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), std::streamsize(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), std::size_t(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

// Flat run parameters; lengths in heteroclinic widths (the unit length of the equation).
struct Params {
  double eps = 0.2;
  double L_hw = 0.0;  // 0: ceil(8 / eps)
  double M_hw = 0.0;  // 0: |q(L)| + margin
  double h_hw = 0.1;
  double newton_tol = 1e-10;
  double linear_tol = 1e-9;
  int max_iters = 30;
  int stencil_order = 4;
  std::string bc_source = "u_star";
  std::string toda_constant = "reduced";
  double profile_half_width_hw = 20.0;
  double profile_spacing_hw = 0.01;
  std::vector<double> potential_coefficients;
  std::vector<double> eps_list = {0.3, 0.2, 0.1};
  double init_R_hw = 6.0;
  double init_bump = 0.05;
  double tau = 0.1;
  std::string out;
  std::string resume;
  std::string input;

  json to_json() const {
    return {{"eps", eps},
            {"L_hw", L_hw},
            {"M_hw", M_hw},
            {"h_hw", h_hw},
            {"newton_tol", newton_tol},
            {"linear_tol", linear_tol},
            {"max_iters", max_iters},
            {"stencil_order", stencil_order},
            {"bc_source", bc_source},
            {"toda_constant", toda_constant},
            {"profile_half_width_hw", profile_half_width_hw},
            {"profile_spacing_hw", profile_spacing_hw},
            {"potential_coefficients", potential_coefficients},
            {"eps_list", eps_list},
            {"init_R_hw", init_R_hw},
            {"init_bump", init_bump},
            {"tau", tau},
            {"out", out}};
  }
};

void load_config(const std::string& path, Params& p) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a flat JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const json& v = it.value();
    try {
      if (k == "eps") p.eps = v;
      else if (k == "L_hw") p.L_hw = v;
      else if (k == "M_hw") p.M_hw = v;
      else if (k == "h_hw") p.h_hw = v;
      else if (k == "newton_tol") p.newton_tol = v;
      else if (k == "linear_tol") p.linear_tol = v;
      else if (k == "max_iters") p.max_iters = v;
      else if (k == "stencil_order") p.stencil_order = v;
      else if (k == "bc_source") p.bc_source = v;
      else if (k == "toda_constant") p.toda_constant = v;
      else if (k == "profile_half_width_hw") p.profile_half_width_hw = v;
      else if (k == "profile_spacing_hw") p.profile_spacing_hw = v;
      else if (k == "potential_coefficients") p.potential_coefficients = v.get<std::vector<double>>();
      else if (k == "eps_list") p.eps_list = v.get<std::vector<double>>();
      else if (k == "init_R_hw") p.init_R_hw = v;
      else if (k == "init_bump") p.init_bump = v;
      else if (k == "tau") p.tau = v;
      else if (k == "out") p.out = v;
      else throw ConfigError("unknown config key " + k);
    } catch (const json::exception& e) {
      throw ConfigError("bad value for " + k + ": " + e.what());
    }
  }
}

struct Check {
  double value;
  double threshold;
  std::string relation;  // "<=" or ">="
  bool pass;
};

class Manifest {
 public:
  Manifest(std::string command, std::string out) : command_(std::move(command)), out_(std::move(out)) {
    fs::create_directories(out_);
  }

  std::string path(const std::string& name) const { return (fs::path(out_) / name).string(); }
  void artifact(const std::string& name) { artifacts_.push_back(name); }
  void constants(const json& c) { constants_ = c; }
  void parameters(const json& p) { params_ = p; }
  void extra(const std::string& k, const json& v) { extra_[k] = v; }

  void check_le(const std::string& name, double v, double thr) { checks_[name] = {v, thr, "<=", v <= thr}; }
  void check_ge(const std::string& name, double v, double thr) { checks_[name] = {v, thr, ">=", v >= thr}; }
  void check_true(const std::string& name, bool ok) { checks_[name] = {ok ? 1.0 : 0.0, 1.0, ">=", ok}; }

  bool all_pass() const {
    for (const auto& [k, c] : checks_)
      if (!c.pass) return false;
    return true;
  }

  int finish(int code, const std::string& error = "") {
    json arts = json::array();
    for (const auto& a : artifacts_) {
      const std::string p = path(a);
      arts.push_back({{"path", a}, {"sha256", sha256_file(p)}});
    }
    json checks = json::object();
    for (const auto& [k, c] : checks_)
      checks[k] = {{"value", c.value}, {"threshold", c.threshold}, {"relation", c.relation}, {"pass", c.pass}};
    if (code == kExitOk && !all_pass()) code = kExitDiagnostic;
    json m = {{"schema", 1},           {"command", command_}, {"parameters", params_},
              {"derived_constants", constants_}, {"artifacts", arts},     {"checks", checks},
              {"exit_code", code}};
    if (!error.empty()) m["error"] = error;
    for (auto it = extra_.begin(); it != extra_.end(); ++it) m[it.key()] = it.value();
    std::ofstream(path("manifest.json")) << m.dump(2) << '\n';
    for (const auto& [k, c] : checks_)
      std::cout << (c.pass ? "PASS " : "FAIL ") << k << " = " << c.value << " (" << c.relation << ' ' << c.threshold
                << ")\n";
    return code;
  }

 private:
  std::string command_, out_;
  std::vector<std::string> artifacts_;
  json constants_ = json::object(), params_ = json::object(), extra_ = json::object();
  std::map<std::string, Check> checks_;
};

DoubleWellPotential make_potential(const Params& p) {
  if (p.potential_coefficients.empty()) return DoubleWellPotential::standard_quartic();
  try {
    return DoubleWellPotential::user_polynomial(p.potential_coefficients);
  } catch (const ConstructionError& e) {
    throw ConfigError(e.what());
  }
}

double toda_constant(const Params& p, const HeteroclinicConstants& k) {
  if (p.toda_constant == "reduced") return toda_reduced_constant(k);
  if (p.toda_constant == "two_component") return kSqrt2 / 24.0;
  throw ConfigError("toda_constant must be reduced or two_component");
}

json constants_json(const HeteroclinicConstants& k, double c0) {
  return {{"alpha0", k.alpha0}, {"a_F", k.a_F}, {"e_F", k.e_F}, {"c0", c0}};
}

struct Context {
  Params prm;
  DoubleWellPotential pot = DoubleWellPotential::standard_quartic();
  HeteroclinicProfile prof;
  HeteroclinicConstants k;

  explicit Context(const Params& p) : prm(p), pot(make_potential(p)) {
    prof = solve_heteroclinic(pot, p.profile_half_width_hw, p.profile_spacing_hw);
    k = heteroclinic_constants(prof);
  }
  double L(double eps) const { return prm.L_hw > 0 ? prm.L_hw : default_length(eps); }
};

FourEndSetup setup(const Context& c, double eps) {
  FourEndSetup s = make_four_end(eps, c.L(eps), c.prm.h_hw, c.prof, c.prm.M_hw, c.prm.stencil_order);
  s.cfg.newton_tol = c.prm.newton_tol;
  s.cfg.linear_tol = c.prm.linear_tol;
  s.cfg.max_iters = c.prm.max_iters;
  if (c.prm.bc_source == "u_lambda") {
    s.cfg.bc_source = BcSource::ULambda;
    s.init = u_lambda_start(s, c.prof, c.prm.init_R_hw, 0.0, 0);
  } else if (c.prm.bc_source != "u_star") {
    throw ConfigError("bc_source must be u_star or u_lambda");
  }
  s.cfg.validate(c.k.alpha0);
  return s;
}

void four_end_checks(Manifest& m, const FourEndReport& r, const std::string& prefix) {
  m.check_le(prefix + "hamiltonian_y_spread", r.ham_y_spread, 1e-3);
  m.check_le(prefix + "hamiltonian_x0_rel_error", std::abs(r.ham_x0 - r.ham_target) / r.ham_target, 0.02);
  m.check_le(prefix + "orthogonality_defect", r.orthogonality_defect, 1e-8);
  m.check_le(prefix + "center_gap", r.toda.center_gap, 1.0);
  m.check_le(prefix + "center_depth_abs", std::abs(r.center_depth), 1.0);
  m.check_true(prefix + "monotonicity", r.monotonicity.pass);
  m.check_ge(prefix + "decay_rate", r.decay.beta, 0.0);
}

// ---------- commands ----------

int cmd_heteroclinic(const Context& c, Manifest& m) {
  c.prof.write_csv(m.path("profile.csv"));
  m.artifact("profile.csv");
  double equi = 0, tanh_err = 0, energy = 0;
  const auto& x = c.prof.x();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double H = c.prof.H()[i], Hp = c.prof.Hprime()[i];
    equi = std::max(equi, std::abs(0.5 * Hp * Hp - c.pot.eval(H).F));
    if (std::abs(x[i]) <= 10.0) tanh_err = std::max(tanh_err, std::abs(H - std::tanh(x[i] / kSqrt2)));
    const double w = (i == 0 || i + 1 == x.size()) ? 0.5 : 1.0;
    energy += w * (0.5 * Hp * Hp + c.pot.eval(H).F) * c.prof.spacing();
  }
  std::ofstream(m.path("constants.json")) << constants_json(c.k, toda_reduced_constant(c.k)).dump(2) << '\n';
  m.artifact("constants.json");
  m.check_le("equipartition_sup", equi, 1e-8);
  m.check_le("energy_identity", std::abs(energy - c.k.e_F), 1e-8);
  if (c.pot.kind() == PotentialKind::StandardQuartic) {
    m.check_le("tanh_sup_error", tanh_err, 1e-8);
    m.check_le("e_F_error", std::abs(c.k.e_F - 2 * kSqrt2 / 3), 1e-6);
  }
  return kExitOk;
}

int cmd_toda(const Context& c, Manifest& m) {
  const double c0 = toda_constant(c.prm, c.k);
  const TodaSolution t = toda_closed_form(c.prm.eps, c0, c.k.alpha0);
  const double span = 30.0 / c.prm.eps;
  t.write_csv(m.path("toda.csv"), span, 0.05);
  m.artifact("toda.csv");
  std::ofstream(m.path("scattering.json")) << scattering_record(t).dump(2) << '\n';
  m.artifact("scattering.json");
  const TodaSolution num = integrate_toda(c.prm.eps, c0, c.k.alpha0, span, 0.01);
  double cross = 0;
  for (std::size_t i = 0; i < num.samples->x.size(); ++i)
    cross = std::max(cross, std::abs(num.samples->q1[i] - t.q1(num.samples->x[i])));
  const Asymptote as = asymptote(t);
  m.check_le("slope_error", std::abs(as.slope + c.prm.eps), 1e-6);
  m.check_le("integrator_cross_check", cross, 1e-6);
  m.check_le("first_integral_drift", toda_first_integral_drift(num), 1e-8);
  m.extra("scattering", scattering_record(t));
  return kExitOk;
}

int cmd_build_approx(const Context& c, Manifest& m) {
  const FourEndSetup s = setup(c, c.prm.eps);
  s.init.write_binary(m.path("ubar.bin"));
  m.artifact("ubar.bin");
  m.artifact("ubar.bin.json");
  s.ubar.chart.graph.write_csv(m.path("toda_graph.csv"));
  m.artifact("toda_graph.csv");
  const ScalarField2D E = residual(s.init, c.pot, 2);
  const double inj = injectivity_defect(s.ubar.chart, 0.0, s.cfg.L, 10000, 1);
  m.extra("sup_residual_ubar", E.sup_abs());
  m.extra("tube_width_at_0", s.ubar.chart.d(0.0));
  m.check_le("fermi_roundtrip", inj, 1e-10);
  m.check_le("evenness_defect", evenness_defect(unfold(s.init)), 0.0);
  return kExitOk;
}

int cmd_solve(const Context& c, Manifest& m) {
  ScalarField2D init;
  SolveConfig cfg;
  if (!c.prm.resume.empty()) {
    const Checkpoint ck = read_checkpoint(c.prm.resume);
    init = ck.u;
    cfg = ck.cfg;
  } else {
    const FourEndSetup s = setup(c, c.prm.eps);
    init = s.init;
    cfg = s.cfg;
  }
  SolveResult r;
  try {
    r = solve_newton(cfg, c.pot, init);
  } catch (const DivergenceError& e) {
    m.extra("residual_history", e.history);
    throw;
  }
  write_checkpoint(m.path("checkpoint"), r.u, cfg);
  m.artifact("checkpoint/field.bin");
  m.artifact("checkpoint/field.bin.json");
  m.artifact("checkpoint/solve_config.json");
  m.extra("residual_history", r.history);
  m.extra("linear_iterations", r.linear_iterations);
  m.check_le("final_residual", r.history.back(), cfg.newton_tol);
  m.check_true("monotonicity", monotonicity_check(r.u).pass);
  return kExitOk;
}

int cmd_saddle(const Context& c, Manifest& m) {
  const double L = c.prm.L_hw > 0 ? c.prm.L_hw : 20.0;
  const SolveResult r = solve_saddle(L, c.prm.h_hw, c.pot, c.prof, c.prm.stencil_order);
  const ScalarField2D& U = r.u;
  U.write_binary(m.path("saddle.bin"));
  m.artifact("saddle.bin");
  m.artifact("saddle.bin.json");
  const double anti = swap_antisymmetry(U), nodal = diagonal_nodal_distance(U);
  m.check_le("antisymmetry", anti, 1e-6);
  m.check_le("nodal_distance_to_diagonal", nodal, 2 * c.prm.h_hw);
  m.check_le("origin_value", std::abs(U(0, U.ny - 1)), 1e-12);
  return kExitOk;
}

void write_report(Manifest& m, const FourEndReport& r, const std::string& tag) {
  std::ofstream(m.path("report" + tag + ".json")) << r.to_json().dump(2) << '\n';
  m.artifact("report" + tag + ".json");
}

int cmd_diagnose(const Context& c, Manifest& m) {
  FourEndSetup s = setup(c, c.prm.eps);
  SolveResult r;
  if (!c.prm.input.empty()) {
    const Checkpoint ck = read_checkpoint(c.prm.input);
    if (!ck.u.same_grid(s.init)) throw ConfigError("checkpoint grid does not match the configured run");
    r.u = ck.u;
  } else {
    r = solve_newton(s.cfg, c.pot, s.init);
  }
  const FourEndReport rep = diagnose_four_end(s, r, c.pot, c.prof, c.prm.tau);
  write_report(m, rep, "");
  rep.toda.write_csv(m.path("chi.csv"));
  m.artifact("chi.csv");
  hamiltonian_profile(r.u, c.pot, SliceDirection::YSlices).write_csv(m.path("hamiltonian_y.csv"));
  m.artifact("hamiltonian_y.csv");
  hamiltonian_profile(r.u, c.pot, SliceDirection::XSlices).write_csv(m.path("hamiltonian_x.csv"));
  m.artifact("hamiltonian_x.csv");
  extract_nodal_graph(r.u).write_csv(m.path("nodal_graph.csv"));
  m.artifact("nodal_graph.csv");
  four_end_checks(m, rep, "");
  m.check_ge("toda_residual_ratio", std::min(rep.lhs_sup, rep.rhs_sup) / rep.lambda_sup, 10.0);
  return kExitOk;
}

int cmd_sweep(const Context& c, Manifest& m) {
  std::ofstream csv(m.path("summary.csv"));
  csv << "eps,L,h,center_gap,sup_residual_ubar,sup_u_minus_ubar,lambda_sup,lambda_ratio,chi_norm,chiprime_norm,"
         "chisecond_norm,theta,hamiltonian_y_spread,modulation_sup\n"
      << std::setprecision(17);
  std::vector<double> eps, gaps, res, diff;
  for (double e : c.prm.eps_list) {
    const FourEndSetup s = setup(c, e);
    const SolveResult r = solve_newton(s.cfg, c.pot, s.init);
    const FourEndReport rep = diagnose_four_end(s, r, c.pot, c.prof, c.prm.tau);
    std::ostringstream tag;
    tag << "_eps" << e;
    write_report(m, rep, tag.str());
    const double ratio = std::min(rep.lhs_sup, rep.rhs_sup) / rep.lambda_sup;
    csv << e << ',' << rep.L << ',' << rep.h << ',' << rep.toda.center_gap << ',' << rep.sup_residual_ubar << ','
        << rep.sup_u_minus_ubar << ',' << rep.lambda_sup << ',' << ratio << ',' << rep.toda.chi_norm << ','
        << rep.toda.chip_norm << ',' << rep.toda.chipp_norm << ',' << rep.angle.theta << ',' << rep.ham_y_spread << ','
        << rep.modulation_sup << '\n';
    four_end_checks(m, rep, tag.str().substr(1) + ".");
    m.check_ge(tag.str().substr(1) + ".toda_residual_ratio", ratio, 10.0);
    eps.push_back(e);
    gaps.push_back(rep.toda.center_gap);
    res.push_back(rep.sup_residual_ubar);
    diff.push_back(rep.sup_u_minus_ubar);
  }
  csv.close();
  m.artifact("summary.csv");
  bool monotone = true;
  for (std::size_t i = 0; i + 1 < eps.size(); ++i)
    if ((eps[i + 1] < eps[i]) != (gaps[i + 1] < gaps[i])) monotone = false;
  m.check_true("center_gap_monotone", monotone);
  if (eps.size() >= 2) {
    m.check_ge("residual_exponent", fitted_exponent(eps, res), 1.5);
    m.check_ge("distance_exponent", fitted_exponent(eps, diff), 1.5);
  }
  return kExitOk;
}

int cmd_uniqueness(const Context& c, Manifest& m) {
  const FourEndSetup s = setup(c, c.prm.eps);
  const SolveResult a = solve_newton(s.cfg, c.pot, s.init);
  const ScalarField2D init2 = u_lambda_start(s, c.prof, c.prm.init_R_hw, c.prm.init_bump, 1);
  const SolveResult b = solve_newton(s.cfg, c.pot, init2);
  a.u.write_binary(m.path("from_ubar.bin"));
  b.u.write_binary(m.path("from_ulambda.bin"));
  for (const char* f : {"from_ubar.bin", "from_ubar.bin.json", "from_ulambda.bin", "from_ulambda.bin.json"})
    m.artifact(f);
  m.extra("newton_iterations", {a.iterations, b.iterations});
  m.check_le("sup_difference", sup_difference(a.u, b.u), 1e-6);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Four-end Allen-Cahn laboratory"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "print help");  // -h is taken by the grid spacing
  Params prm;
  std::string config;
  std::string eps_list;
  const std::vector<std::string> names = {"heteroclinic", "toda",  "build-approx", "solve",
                                          "saddle",       "diagnose", "sweep",     "uniqueness-echo"};
  std::map<std::string, CLI::App*> subs;
  for (const auto& n : names) {
    CLI::App* s = app.add_subcommand(n, "run " + n);
    s->add_option("--config", config, "flat JSON config");
    s->add_option("--eps", prm.eps, "asymptotic slope");
    s->add_option("--L", prm.L_hw, "quarter-domain length (heteroclinic widths)");
    s->add_option("--M", prm.M_hw, "quarter-domain depth (heteroclinic widths)");
    s->add_option("--h", prm.h_hw, "grid spacing (heteroclinic widths)");
    s->add_option("--out", prm.out, "output directory");
    subs[n] = s;
  }
  subs["sweep"]->add_option("--eps-list", eps_list, "comma-separated slopes")->delimiter(',');
  subs["solve"]->add_option("--resume", prm.resume, "checkpoint directory to resume from");
  subs["diagnose"]->add_option("--input", prm.input, "checkpoint directory to diagnose");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }
  std::string cmd;
  for (const auto& n : names)
    if (subs[n]->parsed()) cmd = n;
  CLI::App* sub = subs[cmd];

  // Config file first, then explicit flags override.
  Params merged;
  try {
    if (!config.empty()) load_config(config, merged);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  auto given = [&](const char* f) { return sub->count(f) > 0; };
  if (given("--eps")) merged.eps = prm.eps;
  if (given("--L")) merged.L_hw = prm.L_hw;
  if (given("--M")) merged.M_hw = prm.M_hw;
  if (given("--h")) merged.h_hw = prm.h_hw;
  if (given("--out")) merged.out = prm.out;
  merged.resume = prm.resume;
  merged.input = prm.input;
  if (cmd == "sweep" && sub->count("--eps-list") > 0) {
    merged.eps_list.clear();
    std::stringstream ss(eps_list);
    for (std::string tok; std::getline(ss, tok, ',');)
      if (!tok.empty()) merged.eps_list.push_back(std::stod(tok));
  }
  if (merged.out.empty()) merged.out = "out/" + cmd;

  Manifest m(cmd, merged.out);
  m.parameters(merged.to_json());
  try {
    const Context c(merged);
    m.constants(constants_json(c.k, toda_constant(merged, c.k)));
    int rc = kExitOk;
    if (cmd == "heteroclinic") rc = cmd_heteroclinic(c, m);
    else if (cmd == "toda") rc = cmd_toda(c, m);
    else if (cmd == "build-approx") rc = cmd_build_approx(c, m);
    else if (cmd == "solve") rc = cmd_solve(c, m);
    else if (cmd == "saddle") rc = cmd_saddle(c, m);
    else if (cmd == "diagnose") rc = cmd_diagnose(c, m);
    else if (cmd == "sweep") rc = cmd_sweep(c, m);
    else rc = cmd_uniqueness(c, m);
    return m.finish(rc);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return m.finish(kExitConfig, e.what());
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return m.finish(kExitConfig, e.what());
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return m.finish(kExitDivergence, e.what());
  } catch (const SingularJacobian& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return m.finish(kExitDivergence, e.what());
  } catch (const Error& e) {
    std::cerr << "diagnostic failure: " << e.what() << '\n';
    return m.finish(kExitDiagnostic, e.what());
  }
}
