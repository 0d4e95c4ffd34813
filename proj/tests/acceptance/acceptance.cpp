// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "minea/ensemble.hpp"
#include "minea/measure_lab.hpp"
#include "minea/minea_core.hpp"
#include "minea/noise.hpp"
#include "minea/parallel.hpp"
#include "minea/spectral_nse.hpp"

using namespace minea;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* title, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = limit_s <= 0.0 || secs < limit_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("%s criterion %d: %s | %s | %.2fs%s\n", pass ? "PASS" : "FAIL", id, title,
              o.detail.c_str(), secs, in_time ? "" : " (over time limit)");
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1. Stationary OU law
Outcome ou_law() {
  const double l1 = 1.0, kappa = 2.0, sigma = 1.0;
  const std::size_t n = 100000;
  const GaussianLaw1D law = ou_stationary_law(l1, kappa, sigma);
  const OuTransition ou(0.1, l1, kappa, sigma);
  std::vector<double> xs(n);
  parallel_for(n, [&](std::size_t i) {
    RngStream s = make_stream(7, i);
    double z = law.mean + law.stddev() * s.gaussian();
    for (int k = 0; k < 10; ++k) z = ou.apply(z, s.gaussian());
    xs[i] = z;
  });
  const EmpiricalMeasure1D emp(xs);
  const double dn = static_cast<double>(n);
  const double se_mean = std::sqrt(0.5 / dn);
  const double se_var = 0.5 * std::sqrt(2.0 / (dn - 1.0));
  const double ks = ks_distance(emp, GaussianLaw1D(2.0, 0.5));
  const double crit = ks_critical(n, 0.01);
  const bool pass = std::abs(emp.mean() - 2.0) <= 3 * se_mean &&
                    std::abs(emp.variance() - 0.5) <= 3 * se_var && ks < crit;
  return {pass, fmt("mean %.5f (3se %.5f) var %.5f (3se %.5f) ks %.5f < %.5f", emp.mean(),
                    3 * se_mean, emp.variance(), 3 * se_var, ks, crit)};
}

// 2. Bilinear identities
Outcome identities() {
  const nse::IdentityReport r = nse::identity_suite(8, 100, 2024);
  const bool pass = r.instances >= 100 && r.worst() <= 1e-10;
  return {pass, fmt("N=%d instances=%d worst %.3g (minea anti %.2g energy %.2g axis %.2g; "
                    "nse anti %.2g energy %.2g eigen %.2g enstrophy %.2g)",
                    r.truncation, r.instances, r.worst(), r.minea_antisymmetry, r.minea_energy,
                    r.minea_axis, r.antisymmetry, r.energy, r.eigenmode, r.enstrophy)};
}

// 3. Stationary-point case table
struct ExpectedBranch {
  BranchKind kind;
  int axis;
  double u1;
  double radius_sq;
};

std::vector<ExpectedBranch> table(const MineaParams& p) {
  const double l1 = p.lambda1, l2 = p.lambda2, l3 = p.lambda3, k = p.kappa;
  std::vector<ExpectedBranch> e{{BranchKind::origin, 0, k / l1, 0.0}};
  if (k <= l1 * std::min(l2, l3)) return e;
  if (l2 == l3) {
    e.push_back({BranchKind::circle, 0, l2, k - l1 * l2});
  } else {
    if (k > l1 * l2) e.push_back({BranchKind::isolated, 2, l2, k - l1 * l2});
    if (k > l1 * l3) e.push_back({BranchKind::isolated, 3, l3, k - l1 * l3});
  }
  return e;
}

Outcome stationary_table() {
  const std::vector<MineaParams> regimes{
      {1.0, 2.0, 2.0, 3.0, 0.0},   // equal rates: circle
      {2.0, 3.0, 2.0, 5.0, 0.0},   // lambda2 > lambda3, only axis 3 active
      {0.5, 2.0, 3.0, 1.2, 0.0},   // lambda3 > lambda2, only axis 2 active
      {1.0, 2.0, 3.0, 4.0, 0.0}};  // both axes active
  bool pass = true;
  double worst = 0.0;
  std::string detail;
  for (const MineaParams& p : regimes) {
    const StationarySet s = stationary_points(p);
    const auto want = table(p);
    bool ok = s.branches.size() == want.size();
    for (std::size_t i = 0; ok && i < want.size(); ++i) {
      const StationaryBranch& b = s.branches[i];
      ok = b.kind == want[i].kind && b.axis == want[i].axis &&
           std::abs(b.u1 - want[i].u1) <= 1e-14 * std::abs(want[i].u1) &&
           std::abs(b.radius_sq - want[i].radius_sq) <= 1e-14 * std::max(1.0, want[i].radius_sq) &&
           !b.witnesses.empty();
      for (const State3& w : b.witnesses) {
        const State3 d = drift(p, w);
        worst = std::max({worst, std::abs(d.u1), std::abs(d.u2), std::abs(d.u3)});
        ok = ok && std::abs(w.u1 - want[i].u1) <= 1e-14 * std::abs(want[i].u1);
      }
    }
    pass = pass && ok;
    detail += fmt("%zu branches%s; ", s.branches.size(), ok ? "" : " MISMATCH");
  }
  pass = pass && worst < 1e-12;
  return {pass, detail + fmt("max residual %.3g", worst)};
}

// 4. Subcritical uniqueness
Outcome subcritical() {
  EnsembleSpec spec{{1, 1, 1, 0.5, 0.3}, {0, 1, 1}, 100.0, 1e-3, Scheme::exp, 4, 0, 100};
  const std::vector<State3> ends = ensemble_endpoints(spec);
  std::size_t small = 0;
  std::vector<double> u1;
  for (const State3& u : ends) {
    small += u.X() < 1e-6;
    u1.push_back(u.u1);
  }
  const double frac = static_cast<double>(small) / static_cast<double>(ends.size());
  const double ks = ks_distance(EmpiricalMeasure1D(u1), GaussianLaw1D(0.5, 0.045));
  const double crit = ks_critical(u1.size(), 0.01);
  return {frac >= 0.95 && ks < crit,
          fmt("X(T)<1e-6 in %.0f%% of %zu; ks %.4f < %.4f", 100 * frac, ends.size(), ks, crit)};
}

// 5. Supercritical non-uniqueness
Outcome supercritical() {
  const MineaParams p{1, 1, 1, 2, 0.1};
  const std::size_t n = 50;
  std::vector<E55Check> checks(n);
  parallel_for(n, [&](std::size_t i) {
    RngStream s = make_stream(5, i);
    const Trajectory tr = simulate(p, {0, 1, 0}, 500.0, 1e-3, Scheme::exp, s, 10);
    checks[i] = e55_check(tr, p, 0.8);
  });
  std::size_t ok = 0;
  double lowest = 1e300;
  for (const E55Check& c : checks) {
    ok += c.pass;
    lowest = std::min(lowest, c.observed);
  }
  const double frac = static_cast<double>(ok) / static_cast<double>(n);
  const DualBasinResult d = dual_basin_experiment(p, 200.0, 1e-3, 500, 1);
  const bool pass = frac >= 0.95 && d.separated && std::abs(d.meanA - 2.0) <= 0.05 &&
                    std::abs(d.meanB - 1.0) <= 0.1;
  return {pass, fmt("e55 pass %.0f%% (min avg X %.4f, bound %.2f); dual basin ks %.3f crit %.3f "
                    "meanA %.4f meanB %.4f",
                    100 * frac, lowest, checks[0].bound, d.ks_between, d.critical, d.meanA, d.meanB)};
}

// 6. Invariant subspace
Outcome invariant_subspace() {
  const std::uint64_t steps = 100000;
  const double dt = 1e-3;

  const MineaParams p{1, 1, 1, 2, 0.5};
  const MineaStepper st(p, dt);
  const OuTransition ou(dt, p.lambda1, p.kappa, p.sigma);
  RngStream s = make_stream(6, 0);
  State3 u{0.3, 0.0, 0.0};
  double z = u.u1;
  bool minea_zero = true, minea_ou = true;
  for (std::uint64_t k = 0; k < steps; ++k) {
    const double g = s.gaussian();
    u = st.step_exp(u, g);
    z = ou.apply(z, g);
    minea_zero = minea_zero && u.u2 == 0.0 && u.u3 == 0.0;
    minea_ou = minea_ou && u.u1 == z;
  }

  nse::NseParams np;
  np.kappa = 1.0;
  np.sigma = 0.5;
  np.truncation = 4;
  const nse::NseStepper ns(np, dt);
  const nse::Wavevector e = np.forced_mode;
  nse::SpectralField f = 1.0 * nse::stokes_eigenmode(e, np.truncation);
  RngStream s2 = make_stream(6, 1);
  const OuTransition nou(dt, np.ou_rate(), np.kappa, np.sigma);
  double zf = 1.0, dev = 0.0;
  bool nse_zero = true;
  for (std::uint64_t k = 0; k < steps; ++k) {
    const double g = s2.gaussian();
    f = ns.step(f, std::sqrt(dt) * g);
    zf = nou.apply(zf, g);
    dev = std::max(dev, std::abs(ns.forced_amplitude(f) - zf));
    const auto& half = f.modes().half();
    for (std::size_t i = 0; i < half.size(); ++i)
      if (!(half[i] == e)) nse_zero = nse_zero && f.half()[i] == nse::Complex(0.0, 0.0);
  }
  const bool pass = minea_zero && minea_ou && nse_zero && dev <= 5 * dt;
  return {pass, fmt("minea u2,u3 zero: %s, u1 == OU path: %s; nse off-mode zero: %s, "
                    "forced deviation %.3g <= %.3g",
                    minea_zero ? "yes" : "no", minea_ou ? "yes" : "no", nse_zero ? "yes" : "no",
                    dev, 5 * dt)};
}

// 7. Moment and energy ceilings
Outcome energy_bounds() {
  const MineaParams p{1, 1, 1, 2, 0.5};
  const State3 v{0, 1, 1};
  const EnsembleSpec spec{p, v, 100.0, 1e-3, Scheme::exp, 8, 0, 200};
  const MomentPath m = ensemble_moment_path(spec, 100);
  const double ceil_m = lyapunov_ceiling(p, v);
  const double peak_m = *std::max_element(m.mean_norm2.begin(), m.mean_norm2.end());

  nse::NseParams np;
  np.kappa = 1.0;
  np.sigma = 0.5;
  np.truncation = 4;
  RngStream s = make_stream(8, 1000);
  const nse::SpectralField f0 = nse::random_field(np.truncation, s, 1.0);
  const nse::EnergyPath e = nse::ensemble_energy_path(np, f0, 100.0, 1e-2, 200, 9, 10);
  const double ceil_n = nse::energy_ceiling(np, f0);
  const double peak_n = *std::max_element(e.mean_energy.begin(), e.mean_energy.end());
  const bool pass = m.times.back() >= 100.0 - 1e-9 && e.times.back() >= 100.0 - 1e-9 &&
                    peak_m < ceil_m && peak_n < ceil_n;
  return {pass, fmt("minea max mean |u|^2 %.4f < %.4f; nse max mean |u|_H^2 %.4f < %.4f", peak_m,
                    ceil_m, peak_n, ceil_n)};
}

// 8. Time average of the V-norm of the forced OU field
Outcome ou_field_average() {
  nse::NseParams np;
  np.mu = 1.0;
  np.kappa = 1.0;
  np.sigma = 1.0;
  np.truncation = 1;
  const double lam = np.forced_eigenvalue();
  const double theta = np.ou_rate();
  const double dt = 1e-3, t_end = 1e4;
  const nse::NseStepper ns(np, dt);
  const std::uint64_t n = step_count(t_end, dt);

  RngStream s = make_stream(10, 0);
  const double m = np.kappa / theta;
  const double v = np.sigma * np.sigma / (2.0 * theta);
  nse::SpectralField f = (m + std::sqrt(v) * s.gaussian()) *
                         nse::stokes_eigenmode(np.forced_mode, np.truncation);
  double sum = 0.0;
  for (std::uint64_t k = 0; k < n; ++k) {
    f = ns.step(f, std::sqrt(dt) * s.gaussian());
    sum += nse::norm_V2(f);
  }
  const double avg = sum / static_cast<double>(n);
  const double expected = (np.kappa * np.kappa / (lam * lam * np.mu * np.mu) +
                           np.sigma * np.sigma / (2.0 * lam * np.mu)) * lam;
  // integrated autocovariance of z^2 for a stationary OU with mean m, variance v, rate theta
  const double se = lam * std::sqrt(2.0 * (4.0 * m * m * v / theta + v * v / theta) / t_end);
  return {std::abs(avg - expected) <= 3 * se,
          fmt("time average %.5f expected %.5f (3se %.5f)", avg, expected, 3 * se)};
}

// 9. Byte-identical outputs across repeats and worker counts
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / ("minea_accept_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  struct Run {
    std::string command;
    std::string config;
    std::vector<std::string> files;
  };
  const std::vector<Run> runs{
      {"simulate", "subcritical.json", {"trajectory.csv"}},
      {"stationary-points", "stationary.json", {"stationary_points.json"}},
      {"phase-scan", "phase_scan.json", {"phase_scan.csv"}},
      {"dual-basin", "supercritical.json", {"dual_basin.json", "basin_a.csv", "basin_b.csv"}},
      {"nse-verify", "nse_verify.json", {"nse_verify.json"}},
      {"ou-check", "ou_check.json", {"ou_check.json", "ou_samples.csv"}}};
  const std::vector<std::string> envs{"MINEA_ERGO_WORKERS=1", "MINEA_ERGO_WORKERS=3",
                                      "MINEA_ERGO_WORKERS=3"};
  std::size_t compared = 0;
  std::string bad;
  for (const Run& r : runs) {
    for (std::size_t e = 0; e < envs.size(); ++e) {
      const std::string out = (dir / (std::to_string(e) + "_")).string();
      const std::string cmd = envs[e] + " '" MINEA_ERGO_BIN "' " + r.command + " --config '" +
                              MINEA_CONFIG_DIR "/" + r.config + "' --out '" + out +
                              "' > /dev/null 2>&1";
      const int status = std::system(cmd.c_str());
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
        return {false, r.command + " exited with status " + std::to_string(status)};
    }
    for (const std::string& f : r.files) {
      const std::string ref = slurp(dir / ("0_" + f));
      for (std::size_t e = 1; e < envs.size(); ++e) {
        ++compared;
        if (ref.empty() || ref != slurp(dir / (std::to_string(e) + "_" + f))) bad += f + " ";
      }
    }
  }
  fs::remove_all(dir);
  return {bad.empty(), fmt("%zu file comparisons over worker counts 1 and 3", compared) +
                           (bad.empty() ? "" : "; differing: " + bad)};
}

}  // namespace

int main() {
  report(1, "stationary OU law", 5, ou_law);
  report(2, "bilinear identities", 10, identities);
  report(3, "stationary-point case table", 1, stationary_table);
  report(4, "subcritical uniqueness", 60, subcritical);
  report(5, "supercritical non-uniqueness", 180, supercritical);
  report(6, "invariant-subspace exactness", 30, invariant_subspace);
  report(7, "moment and energy ceilings", 60, energy_bounds);
  report(8, "forced-mode OU time average", 30, ou_field_average);
  report(9, "determinism across runs and worker counts", 0, determinism);
  return failures == 0 ? 0 : 1;
}
