#include "minea/measure_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "minea/ensemble.hpp"
#include "minea/errors.hpp"
#include "minea/parallel.hpp"

namespace minea {

// ---------------------------------------------------------------------------
// EmpiricalMeasure1D

EmpiricalMeasure1D::EmpiricalMeasure1D(std::vector<double> samples) : samples_(std::move(samples)) {
  if (samples_.empty()) throw InvalidParameter("EmpiricalMeasure1D: need at least one sample");
  for (double x : samples_)
    if (std::isnan(x)) throw InvalidParameter("EmpiricalMeasure1D: NaN sample");
  std::sort(samples_.begin(), samples_.end());
  const double n = static_cast<double>(samples_.size());
  cumulative_.resize(samples_.size());
  for (std::size_t i = 0; i < samples_.size(); ++i)
    cumulative_[i] = static_cast<double>(i + 1) / n;
}

EmpiricalMeasure1D::EmpiricalMeasure1D(std::vector<double> samples, std::vector<double> weights)
    : weighted_(true) {
  if (samples.empty() || samples.size() != weights.size())
    throw InvalidParameter("EmpiricalMeasure1D: samples and weights must be nonempty and match");
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return samples[a] < samples[b]; });
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw InvalidParameter("EmpiricalMeasure1D: negative weight");
    total += w;
  }
  if (!(total > 0.0)) throw InvalidParameter("EmpiricalMeasure1D: zero total weight");
  samples_.reserve(samples.size());
  cumulative_.reserve(samples.size());
  double acc = 0.0;
  for (std::size_t i : order) {
    samples_.push_back(samples[i]);
    acc += weights[i] / total;
    cumulative_.push_back(acc);
  }
  cumulative_.back() = 1.0;
}

double EmpiricalMeasure1D::cdf(double x) const {
  const auto it = std::upper_bound(samples_.begin(), samples_.end(), x);
  if (it == samples_.begin()) return 0.0;
  return cumulative_[static_cast<std::size_t>(it - samples_.begin()) - 1];
}

double EmpiricalMeasure1D::cdf_left(double x) const {
  const auto it = std::lower_bound(samples_.begin(), samples_.end(), x);
  if (it == samples_.begin()) return 0.0;
  return cumulative_[static_cast<std::size_t>(it - samples_.begin()) - 1];
}

double EmpiricalMeasure1D::mean() const {
  double m = 0.0, prev = 0.0;
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    m += (cumulative_[i] - prev) * samples_[i];
    prev = cumulative_[i];
  }
  return m;
}

double EmpiricalMeasure1D::variance() const {
  const double m = mean();
  double v = 0.0, prev = 0.0;
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const double d = samples_[i] - m;
    v += (cumulative_[i] - prev) * d * d;
    prev = cumulative_[i];
  }
  if (!weighted_ && samples_.size() > 1) {
    const double n = static_cast<double>(samples_.size());
    v *= n / (n - 1.0);
  }
  return v;
}

EmpiricalMeasure1D EmpiricalMeasure1D::merge(const EmpiricalMeasure1D& a,
                                             const EmpiricalMeasure1D& b) {
  if (a.weighted_ || b.weighted_)
    throw InvalidParameter("EmpiricalMeasure1D::merge: weighted measures cannot be merged");
  std::vector<double> all;
  all.reserve(a.count() + b.count());
  std::merge(a.samples_.begin(), a.samples_.end(), b.samples_.begin(), b.samples_.end(),
             std::back_inserter(all));
  return EmpiricalMeasure1D(std::move(all));
}

// ---------------------------------------------------------------------------
// Trajectory statistics

namespace {

std::size_t burn_in_index(const Trajectory& traj, double burn_in_frac) {
  if (!(burn_in_frac >= 0.0 && burn_in_frac < 1.0))
    throw InvalidParameter("burn_in_frac must lie in [0, 1)");
  if (traj.times.size() != traj.states.size() || traj.times.empty())
    throw InvalidParameter("trajectory is empty or malformed");
  const double t0 =
      traj.times.front() + burn_in_frac * (traj.times.back() - traj.times.front());
  const auto it = std::lower_bound(traj.times.begin(), traj.times.end(), t0);
  const auto i0 = static_cast<std::size_t>(it - traj.times.begin());
  if (traj.times.size() - i0 < 2)
    throw InvalidParameter("fewer than two recorded points after burn-in");
  return i0;
}

double trapezoid_X(const Trajectory& traj, std::size_t first, std::size_t last) {
  double integral = 0.0;
  for (std::size_t i = first; i < last; ++i)
    integral += 0.5 * (traj.states[i].X() + traj.states[i + 1].X()) *
                (traj.times[i + 1] - traj.times[i]);
  return integral / (traj.times[last] - traj.times[first]);
}

void coordinate_selector_check(int coordinate) {
  if (coordinate < 1 || coordinate > 3) throw InvalidParameter("coordinate must be 1, 2 or 3");
}

double coord(const State3& u, int c) { return c == 1 ? u.u1 : (c == 2 ? u.u2 : u.u3); }

}  // namespace

EmpiricalMeasure1D OccupationMeasure::marginal(int coordinate) const {
  coordinate_selector_check(coordinate);
  std::vector<double> xs;
  xs.reserve(points.size());
  for (const auto& p : points) xs.push_back(coord(p, coordinate));
  return EmpiricalMeasure1D(std::move(xs), weights);
}

OccupationMeasure occupation_measure(const Trajectory& traj, double burn_in_frac) {
  const std::size_t i0 = burn_in_index(traj, burn_in_frac);
  const std::size_t last = traj.times.size() - 1;
  OccupationMeasure occ;
  const double span = traj.times[last] - traj.times[i0];
  for (std::size_t i = i0; i <= last; ++i) {
    const double left = i > i0 ? traj.times[i] - traj.times[i - 1] : 0.0;
    const double right = i < last ? traj.times[i + 1] - traj.times[i] : 0.0;
    occ.points.push_back(traj.states[i]);
    occ.weights.push_back(0.5 * (left + right) / span);
  }
  return occ;
}

double time_average_X(const Trajectory& traj, double burn_in_frac) {
  const std::size_t i0 = burn_in_index(traj, burn_in_frac);
  return trapezoid_X(traj, i0, traj.times.size() - 1);
}

std::vector<double> windowed_X_averages(const Trajectory& traj, double burn_in_frac,
                                        int windows) {
  if (windows < 1) throw InvalidParameter("windowed_X_averages: windows must be positive");
  const std::size_t i0 = burn_in_index(traj, burn_in_frac);
  const std::size_t last = traj.times.size() - 1;
  const std::size_t span = last - i0;
  if (span < static_cast<std::size_t>(windows))
    throw InvalidParameter("windowed_X_averages: too few recorded points for the windows");
  std::vector<double> out;
  for (int j = 0; j < windows; ++j) {
    const std::size_t a = i0 + span * static_cast<std::size_t>(j) / windows;
    const std::size_t b = i0 + span * static_cast<std::size_t>(j + 1) / windows;
    out.push_back(trapezoid_X(traj, a, b));
  }
  return out;
}

double default_rho(const MineaParams& p) {
  return 0.8 * (p.kappa / p.lambda1 - std::min(p.lambda2, p.lambda3));
}

E55Check e55_check(const Trajectory& traj, const MineaParams& p, double rho, double tolerance,
                   double burn_in_frac) {
  p.validate();
  const double upper = p.kappa / p.lambda1 - std::min(p.lambda2, p.lambda3);
  if (!(rho > 0.0 && rho < upper))
    throw InvalidParameter("e55_check: rho must satisfy 0 < rho < kappa/lambda1 - min(lambda2, "
                           "lambda3)");
  const auto windows = windowed_X_averages(traj, burn_in_frac, 4);
  E55Check out;
  out.bound = p.lambda1 * rho;
  out.observed = *std::min_element(windows.begin(), windows.end());
  out.pass = out.observed >= out.bound * (1.0 - tolerance);
  return out;
}

EmpiricalMeasure1D ensemble_law(const MineaParams& p, const State3& v, double t_end, double dt,
                                std::size_t n_traj, std::uint64_t seed, int coordinate,
                                Scheme scheme) {
  coordinate_selector_check(coordinate);
  if (n_traj < 2) throw InvalidParameter("ensemble_law: n_traj must be at least 2");
  EnsembleSpec spec{p, v, t_end, dt, scheme, seed, 0, n_traj};
  const auto ends = ensemble_endpoints(spec);
  std::vector<double> xs;
  xs.reserve(ends.size());
  for (const auto& u : ends) xs.push_back(coord(u, coordinate));
  return EmpiricalMeasure1D(std::move(xs));
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov

namespace {

template <class Cdf>
double ks_against(const EmpiricalMeasure1D& emp, Cdf&& model) {
  const auto& xs = emp.samples();
  double d = 0.0;
  std::size_t i = 0;
  while (i < xs.size()) {
    const double x = xs[i];
    const double g = model(x);
    d = std::max({d, std::abs(emp.cdf_left(x) - g), std::abs(emp.cdf(x) - g)});
    while (i < xs.size() && xs[i] == x) ++i;
  }
  return std::min(d, 1.0);
}

}  // namespace

double ks_distance(const EmpiricalMeasure1D& emp, const GaussianLaw1D& law) {
  if (!(law.variance > 0.0))
    throw InvalidParameter("ks_distance: law has zero variance, compare against a point mass");
  return ks_against(emp, [&](double x) { return law.cdf(x); });
}

double ks_distance_point_mass(const EmpiricalMeasure1D& emp, double at, double tol) {
  return std::max(emp.cdf_left(at - tol), 1.0 - emp.cdf(at + tol));
}

double ks_two_sample(const EmpiricalMeasure1D& a, const EmpiricalMeasure1D& b) {
  double d = 0.0;
  for (const auto* m : {&a, &b})
    for (double x : m->samples()) d = std::max(d, std::abs(a.cdf(x) - b.cdf(x)));
  return d;
}

double kolmogorov_sf(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 1.0) {
    // Small-x form: K(x) = sqrt(2 pi)/x sum_k exp(-(2k-1)^2 pi^2 / (8 x^2)).
    double s = 0.0;
    for (int k = 1; k <= 20; ++k) {
      const double j = 2.0 * k - 1.0;
      s += std::exp(-j * j * std::numbers::pi * std::numbers::pi / (8.0 * x * x));
    }
    return 1.0 - std::sqrt(2.0 * std::numbers::pi) / x * s;
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return 2.0 * s;
}

double kolmogorov_critical(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameter("alpha must lie in (0, 1)");
  double lo = 0.05, hi = 10.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (kolmogorov_sf(mid) > alpha ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double ks_critical(std::size_t n, double alpha) {
  if (n == 0) throw InvalidParameter("ks_critical: n must be positive");
  return kolmogorov_critical(alpha) / std::sqrt(static_cast<double>(n));
}

double ks_critical_two_sample(std::size_t n, std::size_t m, double alpha) {
  if (n == 0 || m == 0) throw InvalidParameter("ks_critical_two_sample: empty sample");
  const double dn = static_cast<double>(n), dm = static_cast<double>(m);
  return kolmogorov_critical(alpha) * std::sqrt((dn + dm) / (dn * dm));
}

// ---------------------------------------------------------------------------
// Experiments

DualBasinResult dual_basin_experiment(const MineaParams& p, double t_end, double dt,
                                      std::size_t n_traj, std::uint64_t seed, Scheme scheme) {
  p.validate();
  if (uniqueness_regime(p).regime != Regime::supercritical)
    throw InvalidParameter("dual_basin_experiment: requires kappa > lambda1 min(lambda2, lambda3)");
  if (n_traj < 2) throw InvalidParameter("dual_basin_experiment: n_traj must be at least 2");

  EnsembleSpec a{p, {0.0, 0.0, 0.0}, t_end, dt, scheme, seed, 0, n_traj};
  EnsembleSpec b{p, {0.0, 1.0, 0.0}, t_end, dt, scheme, seed, n_traj, n_traj};
  const auto ends_a = ensemble_endpoints(a);
  const auto ends_b = ensemble_endpoints(b);
  std::vector<double> xa, xb;
  for (const auto& u : ends_a) xa.push_back(u.u1);
  for (const auto& u : ends_b) xb.push_back(u.u1);

  DualBasinResult r{EmpiricalMeasure1D(std::move(xa)), EmpiricalMeasure1D(std::move(xb))};
  r.ks_between = ks_two_sample(r.lawA, r.lawB);
  r.critical = ks_critical_two_sample(n_traj, n_traj, 0.001);
  r.meanA = r.lawA.mean();
  r.meanB = r.lawB.mean();
  r.separated = r.ks_between > r.critical;
  return r;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::unique_like: return "unique-like";
    case Verdict::multi_like: return "multi-like";
    case Verdict::inconclusive: return "inconclusive";
    case Verdict::error: return "error";
  }
  return "?";
}

namespace {

struct CellSample {
  bool done = false;
  bool failed = false;
  std::string error;
  double u1 = 0.0;
  double timeavg_X = 0.0;
  bool e55_pass = false;
};

constexpr double kUniqueXThreshold = 0.01;
constexpr double kMultiPassFraction = 0.95;
constexpr double kScanAlpha = 0.01;

}  // namespace

std::vector<PhaseScanRow> phase_scan(const PhaseScanConfig& cfg) {
  if (cfg.kappas.empty() || cfg.sigmas.empty())
    throw InvalidParameter("phase_scan: kappa and sigma grids must be nonempty");
  if (cfg.n_traj < 2) throw InvalidParameter("phase_scan: n_traj must be at least 2");
  if (!(cfg.burn_in_frac >= 0.0 && cfg.burn_in_frac < 1.0))
    throw InvalidParameter("phase_scan: burn_in_frac must lie in [0, 1)");
  step_count(cfg.t_end, cfg.dt);

  std::vector<MineaParams> cells;
  for (double k : cfg.kappas)
    for (double s : cfg.sigmas) {
      MineaParams p{cfg.lambda1, cfg.lambda2, cfg.lambda3, k, s};
      p.validate();
      cells.push_back(p);
    }

  const std::uint64_t stride =
      std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(0.01 / cfg.dt)));
  const std::size_t n = cfg.n_traj;
  std::vector<CellSample> samples(cells.size() * n);

  parallel_for(samples.size(), [&](std::size_t idx) {
    if (cfg.cancel != nullptr && cfg.cancel->load()) return;
    const MineaParams& p = cells[idx / n];
    const std::size_t j = idx % n;
    CellSample& out = samples[idx];
    try {
      RngStream stream = make_stream(cfg.seed, j);
      const Trajectory traj = simulate(p, cfg.initial, cfg.t_end, cfg.dt, cfg.scheme, stream, stride);
      out.u1 = traj.states.back().u1;
      out.timeavg_X = time_average_X(traj, cfg.burn_in_frac);
      if (uniqueness_regime(p).regime == Regime::supercritical)
        out.e55_pass = e55_check(traj, p, default_rho(p), kDefaultE55Tolerance, cfg.burn_in_frac).pass;
    } catch (const std::exception& e) {
      out.failed = true;
      out.error = e.what();
    }
    out.done = true;
  });

  std::vector<PhaseScanRow> rows;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto first = samples.begin() + static_cast<std::ptrdiff_t>(c * n);
    const auto last = first + static_cast<std::ptrdiff_t>(n);
    if (!std::all_of(first, last, [](const CellSample& s) { return s.done; })) continue;

    const MineaParams& p = cells[c];
    const RegimeClassification rc = uniqueness_regime(p);
    PhaseScanRow row;
    row.kappa = p.kappa;
    row.sigma = p.sigma;
    row.regime = rc.regime;
    row.e55_bound = rc.regime == Regime::supercritical ? p.lambda1 * default_rho(p)
                                                       : std::numeric_limits<double>::quiet_NaN();
    const auto bad = std::find_if(first, last, [](const CellSample& s) { return s.failed; });
    if (bad != last) {
      row.verdict = Verdict::error;
      row.error = bad->error;
      row.ks_u1 = std::numeric_limits<double>::quiet_NaN();
      row.timeavg_X = std::numeric_limits<double>::quiet_NaN();
      rows.push_back(row);
      continue;
    }

    std::vector<double> u1s;
    double sum_x = 0.0;
    std::size_t passes = 0;
    for (auto it = first; it != last; ++it) {
      u1s.push_back(it->u1);
      sum_x += it->timeavg_X;
      passes += it->e55_pass ? 1 : 0;
    }
    const EmpiricalMeasure1D emp(std::move(u1s));
    const GaussianLaw1D law = ou_stationary_law(p.lambda1, p.kappa, p.sigma);
    row.ks_u1 = law.variance > 0.0
                    ? ks_distance(emp, law)
                    : ks_distance_point_mass(emp, law.mean, 1e-9 * (1.0 + std::abs(law.mean)));
    row.timeavg_X = sum_x / static_cast<double>(n);
    row.e55_pass_fraction = static_cast<double>(passes) / static_cast<double>(n);

    if (rc.regime == Regime::boundary)
      row.verdict = Verdict::inconclusive;
    else if (row.timeavg_X < kUniqueXThreshold && row.ks_u1 < ks_critical(n, kScanAlpha))
      row.verdict = Verdict::unique_like;
    else if (rc.regime == Regime::supercritical && row.e55_pass_fraction >= kMultiPassFraction)
      row.verdict = Verdict::multi_like;
    else
      row.verdict = Verdict::inconclusive;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace minea
