#include "minea/cli.hpp"

#include <atomic>
#include <csignal>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string_view>

#include <CLI11.hpp>

#include "minea/errors.hpp"
#include "minea/measure_lab.hpp"
#include "minea/noise.hpp"
#include "minea/parallel.hpp"

namespace minea::cli {

using json = nlohmann::json;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

void check_keys(const json& obj, std::string_view section,
                std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(std::string(section) + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(std::string(section) + ": unknown key '" + key + "'");
  }
}

double number(const json& obj, const char* key, std::string_view section, double fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(std::string(section) + "." + key + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(std::string(section) + "." + key + ": must be finite");
  return x;
}

std::uint64_t unsigned_int(const json& obj, const char* key, std::string_view section,
                           std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_unsigned())
    throw ConfigError(std::string(section) + "." + key + ": expected a non-negative integer");
  return v.get<std::uint64_t>();
}

std::vector<double> number_array(const json& v, std::string_view what) {
  if (!v.is_array()) throw ConfigError(std::string(what) + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError(std::string(what) + ": expected an array of numbers");
    out.push_back(x.get<double>());
    if (!std::isfinite(out.back())) throw ConfigError(std::string(what) + ": must be finite");
  }
  return out;
}

MineaParams parse_system(const json& j) {
  check_keys(j, "system", {"lambda", "kappa", "sigma"});
  if (!j.contains("lambda")) throw ConfigError("system.lambda: missing");
  const auto lam = number_array(j.at("lambda"), "system.lambda");
  if (lam.size() != 3) throw ConfigError("system.lambda: expected three values");
  MineaParams p{lam[0], lam[1], lam[2], number(j, "kappa", "system", 0.0),
                number(j, "sigma", "system", 0.0)};
  try {
    p.validate();
  } catch (const InvalidParameter& e) {
    throw ConfigError(std::string("system: ") + e.what());
  }
  return p;
}

NseSection parse_nse(const json& j) {
  check_keys(j, "nse",
             {"mu", "forced_mode", "kappa", "sigma", "truncation", "identity_instances",
              "initial_amplitude", "consistency_t_end", "convergence", "inject_fault"});
  NseSection s;
  s.params.mu = number(j, "mu", "nse", 1.0);
  if (j.contains("forced_mode")) {
    const auto& fm = j.at("forced_mode");
    if (!fm.is_array() || fm.size() != 2 || !fm[0].is_number_integer() ||
        !fm[1].is_number_integer())
      throw ConfigError("nse.forced_mode: expected two integers");
    s.params.forced_mode = {fm[0].get<int>(), fm[1].get<int>()};
  }
  s.params.kappa = number(j, "kappa", "nse", 0.0);
  s.params.sigma = number(j, "sigma", "nse", 0.0);
  s.params.truncation = static_cast<int>(unsigned_int(j, "truncation", "nse", 8));
  s.identity_instances = static_cast<int>(unsigned_int(j, "identity_instances", "nse", 100));
  s.initial_amplitude = number(j, "initial_amplitude", "nse", 1.0);
  s.consistency_t_end = number(j, "consistency_t_end", "nse", 10.0);
  if (j.contains("convergence")) {
    const auto& c = j.at("convergence");
    check_keys(c, "nse.convergence", {"n_traj", "t_end", "dt"});
    s.convergence_n_traj = unsigned_int(c, "n_traj", "nse.convergence", 20);
    s.convergence_t_end = number(c, "t_end", "nse.convergence", 50.0);
    s.convergence_dt = number(c, "dt", "nse.convergence", 1e-2);
  }
  if (j.contains("inject_fault")) {
    if (!j.at("inject_fault").is_boolean()) throw ConfigError("nse.inject_fault: expected a boolean");
    s.inject_fault = j.at("inject_fault").get<bool>();
  }
  try {
    s.params.validate();
  } catch (const InvalidParameter& e) {
    throw ConfigError(std::string("nse: ") + e.what());
  }
  if (s.identity_instances < 1) throw ConfigError("nse.identity_instances: must be positive");
  if (!(s.consistency_t_end > 0.0)) throw ConfigError("nse.consistency_t_end: must be positive");
  if (s.convergence_n_traj < 2) throw ConfigError("nse.convergence.n_traj: must be at least 2");
  if (!(s.convergence_t_end > 0.0) || !(s.convergence_dt > 0.0) ||
      s.convergence_dt > s.convergence_t_end)
    throw ConfigError("nse.convergence: need t_end > 0 and 0 < dt <= t_end");
  return s;
}

SimSection parse_sim(const json& j) {
  check_keys(j, "sim",
             {"t_end", "dt", "scheme", "seed", "n_traj", "burn_in_frac", "record_stride"});
  SimSection s;
  s.t_end = number(j, "t_end", "sim", s.t_end);
  s.dt = number(j, "dt", "sim", s.dt);
  if (j.contains("scheme")) {
    if (!j.at("scheme").is_string()) throw ConfigError("sim.scheme: expected \"em\" or \"exp\"");
    try {
      s.scheme = parse_scheme(j.at("scheme").get<std::string>());
    } catch (const InvalidParameter& e) {
      throw ConfigError(std::string("sim.scheme: ") + e.what());
    }
  }
  s.seed = unsigned_int(j, "seed", "sim", s.seed);
  s.n_traj = unsigned_int(j, "n_traj", "sim", s.n_traj);
  s.burn_in_frac = number(j, "burn_in_frac", "sim", s.burn_in_frac);
  s.record_stride = unsigned_int(j, "record_stride", "sim", s.record_stride);
  if (!(s.t_end > 0.0) || !(s.dt > 0.0) || s.dt > s.t_end)
    throw ConfigError("sim: need t_end > 0 and 0 < dt <= t_end");
  if (s.n_traj < 2) throw ConfigError("sim.n_traj: must be at least 2");
  if (!(s.burn_in_frac >= 0.0 && s.burn_in_frac < 1.0))
    throw ConfigError("sim.burn_in_frac: must lie in [0, 1)");
  if (s.record_stride < 1) throw ConfigError("sim.record_stride: must be at least 1");
  return s;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  check_keys(j, "config", {"system", "nse", "sim", "initial_state", "scan", "ou", "output"});
  ExperimentConfig cfg;
  if (j.contains("system")) cfg.system = parse_system(j.at("system"));
  if (j.contains("nse")) cfg.nse = parse_nse(j.at("nse"));
  if (j.contains("sim")) cfg.sim = parse_sim(j.at("sim"));
  if (j.contains("initial_state")) {
    const auto v = number_array(j.at("initial_state"), "initial_state");
    if (v.size() != 3) throw ConfigError("initial_state: expected three values");
    cfg.initial_state = {v[0], v[1], v[2]};
  }
  if (j.contains("scan")) {
    const auto& s = j.at("scan");
    check_keys(s, "scan", {"kappa", "sigma"});
    ScanSection scan;
    if (s.contains("kappa")) scan.kappa = number_array(s.at("kappa"), "scan.kappa");
    if (s.contains("sigma")) scan.sigma = number_array(s.at("sigma"), "scan.sigma");
    if (scan.kappa.empty() || scan.sigma.empty())
      throw ConfigError("scan: kappa and sigma grids must be nonempty");
    for (double s2 : scan.sigma)
      if (s2 < 0.0) throw ConfigError("scan.sigma: values must be non-negative");
    cfg.scan = scan;
  }
  if (j.contains("ou")) {
    const auto& o = j.at("ou");
    check_keys(o, "ou", {"n", "horizon", "steps"});
    cfg.ou.n = unsigned_int(o, "n", "ou", cfg.ou.n);
    cfg.ou.horizon = number(o, "horizon", "ou", cfg.ou.horizon);
    cfg.ou.steps = unsigned_int(o, "steps", "ou", cfg.ou.steps);
    if (cfg.ou.n < 2 || cfg.ou.steps < 1 || !(cfg.ou.horizon > 0.0))
      throw ConfigError("ou: need n >= 2, steps >= 1, horizon > 0");
  }
  if (j.contains("output")) {
    if (!j.at("output").is_string()) throw ConfigError("output: expected a string");
    cfg.output = j.at("output").get<std::string>();
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

// ---------------------------------------------------------------------------
// Output helpers

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_sigint(int) { g_interrupted.store(true); }

void write_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
}

const MineaParams& need_system(const ExperimentConfig& cfg) {
  if (!cfg.system) throw ConfigError("this command needs a 'system' section");
  return *cfg.system;
}

json params_json(const MineaParams& p) {
  return {{"lambda", {p.lambda1, p.lambda2, p.lambda3}}, {"kappa", p.kappa}, {"sigma", p.sigma}};
}

std::string samples_csv(const EmpiricalMeasure1D& m) {
  std::string s = "u1\n";
  for (double x : m.samples()) s += format_double(x) + "\n";
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Commands

int cmd_simulate(const ExperimentConfig& cfg, std::ostream& log) {
  const MineaParams& p = need_system(cfg);
  RngStream stream = make_stream(cfg.sim.seed, 0);
  const Trajectory traj = simulate(p, cfg.initial_state, cfg.sim.t_end, cfg.sim.dt,
                                   cfg.sim.scheme, stream, cfg.sim.record_stride);
  std::string csv = "t,u1,u2,u3,X\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const State3& u = traj.states[i];
    csv += format_double(traj.times[i]) + "," + format_double(u.u1) + "," + format_double(u.u2) +
           "," + format_double(u.u3) + "," + format_double(u.X()) + "\n";
  }
  const std::string path = cfg.output + "trajectory.csv";
  write_file(path, csv);
  log << "wrote " << path << " (" << traj.times.size() << " rows)\n";
  return kExitOk;
}

int cmd_stationary_points(const ExperimentConfig& cfg, std::ostream& log) {
  const MineaParams& p = need_system(cfg);
  const StationarySet set = stationary_points(p);
  json branches = json::array();
  for (const auto& b : set.branches) {
    json w = json::array(), res = json::array();
    double worst = 0.0;
    for (const auto& x : b.witnesses) {
      w.push_back({x.u1, x.u2, x.u3});
      const double r = std::sqrt(drift(p, x).norm2());
      res.push_back(r);
      worst = std::max(worst, r);
    }
    json entry = {{"kind", std::string(to_string(b.kind))},
                  {"u1", b.u1},
                  {"radius_sq", b.radius_sq},
                  {"witnesses", w},
                  {"drift_residuals", res},
                  {"max_residual", worst}};
    if (b.kind == BranchKind::isolated) entry["axis"] = b.axis;
    branches.push_back(entry);
  }
  const std::string text = branches.dump(2) + "\n";
  const std::string path = cfg.output + "stationary_points.json";
  write_file(path, text);
  log << text;
  return kExitOk;
}

int cmd_phase_scan(const ExperimentConfig& cfg, std::ostream& log) {
  const MineaParams& p = need_system(cfg);
  if (!cfg.scan) throw ConfigError("phase-scan needs a 'scan' section");
  PhaseScanConfig sc;
  sc.lambda1 = p.lambda1;
  sc.lambda2 = p.lambda2;
  sc.lambda3 = p.lambda3;
  sc.kappas = cfg.scan->kappa;
  sc.sigmas = cfg.scan->sigma;
  sc.initial = cfg.initial_state;
  sc.t_end = cfg.sim.t_end;
  sc.dt = cfg.sim.dt;
  sc.n_traj = cfg.sim.n_traj;
  sc.seed = cfg.sim.seed;
  sc.burn_in_frac = cfg.sim.burn_in_frac;
  sc.scheme = cfg.sim.scheme;
  sc.cancel = &g_interrupted;

  const auto rows = phase_scan(sc);
  std::string csv = "kappa,sigma,regime,ks_u1,timeavg_X,e55_bound,verdict\n";
  std::size_t ok = 0;
  for (const auto& r : rows) {
    csv += format_double(r.kappa) + "," + format_double(r.sigma) + "," +
           std::string(to_string(r.regime)) + "," + format_double(r.ks_u1) + "," +
           format_double(r.timeavg_X) + "," + format_double(r.e55_bound) + "," +
           std::string(to_string(r.verdict)) + "\n";
    if (r.verdict == Verdict::error)
      log << "cell kappa=" << r.kappa << " sigma=" << r.sigma << ": " << r.error << "\n";
    else
      ++ok;
  }
  const std::string path = cfg.output + "phase_scan.csv";
  write_file(path, csv);
  log << "wrote " << path << " (" << rows.size() << " cells"
      << (g_interrupted.load() ? ", interrupted" : "") << ")\n";
  if (!rows.empty() && ok == 0) return kExitBlowUp;
  return kExitOk;
}

int cmd_dual_basin(const ExperimentConfig& cfg, bool expect_separation, std::ostream& log) {
  const MineaParams& p = need_system(cfg);
  const DualBasinResult r =
      dual_basin_experiment(p, cfg.sim.t_end, cfg.sim.dt, cfg.sim.n_traj, cfg.sim.seed,
                            cfg.sim.scheme);
  const json report = {{"params", params_json(p)},
                       {"t_end", cfg.sim.t_end},
                       {"dt", cfg.sim.dt},
                       {"n_traj", cfg.sim.n_traj},
                       {"seed", cfg.sim.seed},
                       {"meanA", r.meanA},
                       {"meanB", r.meanB},
                       {"ks_between", r.ks_between},
                       {"critical_0.001", r.critical},
                       {"separated", r.separated}};
  write_file(cfg.output + "dual_basin.json", report.dump(2) + "\n");
  write_file(cfg.output + "basin_a.csv", samples_csv(r.lawA));
  write_file(cfg.output + "basin_b.csv", samples_csv(r.lawB));
  log << report.dump(2) << "\n";
  if (expect_separation && !r.separated) {
    log << "expected separation, but the basins are not separated\n";
    return kExitVerification;
  }
  return kExitOk;
}

int cmd_nse_verify(const ExperimentConfig& cfg, std::ostream& log) {
  if (!cfg.nse) throw ConfigError("nse-verify needs an 'nse' section");
  const NseSection& s = *cfg.nse;
  const nse::NseParams& p = s.params;
  constexpr double kIdentityTol = 1e-10;

  const nse::IdentityReport ids =
      nse::identity_suite(p.truncation, s.identity_instances, cfg.sim.seed, s.inject_fault);
  const bool ids_pass = ids.worst() <= kIdentityTol;

  RngStream stream = make_stream(cfg.sim.seed, 1);
  const nse::ConsistencyResult cons =
      nse::eigenmode_consistency(p, s.initial_amplitude, s.consistency_t_end, cfg.sim.dt, stream);
  const double cons_bound = 5.0 * cfg.sim.dt;
  const bool cons_pass = cons.max_deviation <= cons_bound && cons.max_offmode_energy <= 1e-12;

  json conv;
  if (nse::smallness_indicator(p) <= nse::kSmallnessGate) {
    RngStream vs = make_stream(cfg.sim.seed, 2);
    const nse::SpectralField v = nse::random_field(p.truncation, vs, 1.0);
    const auto r = nse::small_noise_convergence(p, v, s.convergence_t_end, s.convergence_dt,
                                                s.convergence_n_traj, cfg.sim.seed + 1);
    conv = {{"skipped", false},
            {"n_traj", s.convergence_n_traj},
            {"t_end", s.convergence_t_end},
            {"dt", s.convergence_dt},
            {"initial_offmode_energy", r.initial_offmode},
            {"final_offmode_energy", r.offmode_energy.back()},
            {"decay_ratio", r.offmode_energy.back() / r.initial_offmode},
            {"ks_forced_mode", r.ks_forced_mode},
            {"ks_critical_0.01", r.ks_critical},
            {"times", r.times},
            {"offmode_energy", r.offmode_energy}};
  } else {
    conv = {{"skipped", true},
            {"reason", "kappa^2/(lambda mu^4) + sigma^2/(2 mu^3) exceeds 0.01"},
            {"indicator", nse::smallness_indicator(p)}};
  }

  const json report = {
      {"params",
       {{"mu", p.mu},
        {"forced_mode", {p.forced_mode.k1, p.forced_mode.k2}},
        {"kappa", p.kappa},
        {"sigma", p.sigma},
        {"truncation", p.truncation}}},
      {"identities",
       {{"instances", ids.instances},
        {"tolerance", kIdentityTol},
        {"antisymmetry", ids.antisymmetry},
        {"energy", ids.energy},
        {"eigenmode", ids.eigenmode},
        {"enstrophy", ids.enstrophy},
        {"minea_antisymmetry", ids.minea_antisymmetry},
        {"minea_energy", ids.minea_energy},
        {"minea_axis", ids.minea_axis},
        {"fault_injected", s.inject_fault},
        {"pass", ids_pass}}},
      {"eigenmode_consistency",
       {{"amplitude", s.initial_amplitude},
        {"t_end", s.consistency_t_end},
        {"dt", cfg.sim.dt},
        {"max_deviation", cons.max_deviation},
        {"bound", cons_bound},
        {"max_offmode_energy", cons.max_offmode_energy},
        {"pass", cons_pass}}},
      {"small_noise_convergence", conv},
      {"pass", ids_pass && cons_pass}};
  write_file(cfg.output + "nse_verify.json", report.dump(2) + "\n");
  log << "identities worst residual " << ids.worst() << ", consistency deviation "
      << cons.max_deviation << "\n";
  return ids_pass && cons_pass ? kExitOk : kExitVerification;
}

int cmd_ou_check(const ExperimentConfig& cfg, std::ostream& log) {
  const MineaParams& p = need_system(cfg);
  const GaussianLaw1D law = ou_stationary_law(p.lambda1, p.kappa, p.sigma);
  const std::size_t n = cfg.ou.n;
  const double h = cfg.ou.horizon / static_cast<double>(cfg.ou.steps);
  const OuTransition ou(h, p.lambda1, p.kappa, p.sigma);
  const double s = law.stddev();

  std::vector<double> xs(n);
  parallel_for(n, [&](std::size_t i) {
    RngStream stream = make_stream(cfg.sim.seed, i);
    double z = law.mean + s * stream.gaussian();
    for (std::size_t k = 0; k < cfg.ou.steps; ++k) z = ou.apply(z, stream.gaussian());
    xs[i] = z;
  });
  const EmpiricalMeasure1D emp(xs);
  const double mean = emp.mean();
  const double var = emp.variance();
  const double dn = static_cast<double>(n);

  json report = {{"params", params_json(p)},
                 {"n", n},
                 {"seed", cfg.sim.seed},
                 {"horizon", cfg.ou.horizon},
                 {"steps", cfg.ou.steps},
                 {"analytic_mean", law.mean},
                 {"analytic_variance", law.variance},
                 {"empirical_mean", mean},
                 {"empirical_variance", var}};
  bool pass = true;
  if (law.degenerate()) {
    double spread = 0.0;
    for (double x : xs) spread = std::max(spread, std::abs(x - law.mean));
    report["degenerate"] = true;
    report["point_mass"] = law.mean;
    report["max_abs_deviation"] = spread;
    report["ks"] = nullptr;
  } else {
    const double se_mean = std::sqrt(law.variance / dn);
    const double se_var = law.variance * std::sqrt(2.0 / (dn - 1.0));
    const double ks = ks_distance(emp, law);
    const double crit = ks_critical(n, 0.01);
    pass = ks < crit;
    report["degenerate"] = false;
    report["se_mean"] = se_mean;
    report["se_variance"] = se_var;
    report["mean_within_3se"] = std::abs(mean - law.mean) <= 3.0 * se_mean;
    report["variance_within_3se"] = std::abs(var - law.variance) <= 3.0 * se_var;
    report["ks"] = ks;
    report["ks_critical_0.01"] = crit;
  }
  report["pass"] = pass;
  std::string csv = "u1\n";
  for (double x : xs) csv += format_double(x) + "\n";
  write_file(cfg.output + "ou_check.json", report.dump(2) + "\n");
  write_file(cfg.output + "ou_samples.csv", csv);
  log << report.dump(2) << "\n";
  return pass ? kExitOk : kExitVerification;
}

// ---------------------------------------------------------------------------

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulation and verification runner for the Minea SDE and the truncated 2D "
               "stochastic Navier-Stokes system"};
  std::string command, config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> prefix;
  bool expect_separation = false;
  app.add_option("command", command, "simulate | phase-scan | stationary-points | dual-basin | "
                                     "nse-verify | ou-check")
      ->required()
      ->check(CLI::IsMember({"simulate", "phase-scan", "stationary-points", "dual-basin",
                             "nse-verify", "ou-check"}));
  app.add_option("--config", config_path, "JSON experiment config")->required();
  app.add_option("--seed", seed, "override sim.seed");
  app.add_option("--out", prefix, "override the output path prefix");
  app.add_flag("--expect-separation", expect_separation,
               "dual-basin: exit 4 unless the basins separate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return kExitConfig;
  }

  g_interrupted.store(false);
  auto previous = std::signal(SIGINT, on_sigint);
  int code = kExitOk;
  try {
    ExperimentConfig cfg = load_config(config_path);
    if (seed) cfg.sim.seed = *seed;
    if (prefix) cfg.output = *prefix;
    if (command == "simulate") code = cmd_simulate(cfg, out);
    else if (command == "stationary-points") code = cmd_stationary_points(cfg, out);
    else if (command == "phase-scan") code = cmd_phase_scan(cfg, out);
    else if (command == "dual-basin") code = cmd_dual_basin(cfg, expect_separation, out);
    else if (command == "nse-verify") code = cmd_nse_verify(cfg, out);
    else code = cmd_ou_check(cfg, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    code = kExitConfig;
  } catch (const InvalidParameter& e) {
    err << "invalid parameter: " << e.what() << "\n";
    code = kExitConfig;
  } catch (const InvalidState& e) {
    err << "invalid state: " << e.what() << "\n";
    code = kExitConfig;
  } catch (const BlowUp& e) {
    err << e.what() << "\n";
    code = kExitBlowUp;
  }
  std::signal(SIGINT, previous);
  return code;
}

}  // namespace minea::cli
