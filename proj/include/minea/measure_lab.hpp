#pragma once

// Statistics over trajectories and ensembles: empirical and occupation
// measures, Kolmogorov-Smirnov distances, time averages of X = u2^2 + u3^2,
// the dual-basin experiment and the (kappa, sigma) phase scan.

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "minea/minea_core.hpp"
#include "minea/noise.hpp"

namespace minea {

/// Sorted samples with cumulative weights (uniform unless given).
class EmpiricalMeasure1D {
 public:
  explicit EmpiricalMeasure1D(std::vector<double> samples);
  EmpiricalMeasure1D(std::vector<double> samples, std::vector<double> weights);

  std::size_t count() const noexcept { return samples_.size(); }
  const std::vector<double>& samples() const noexcept { return samples_; }
  bool weighted() const noexcept { return weighted_; }

  /// Mass of (-inf, x]; right-continuous, nondecreasing.
  double cdf(double x) const;
  /// Mass of (-inf, x).
  double cdf_left(double x) const;
  double mean() const;
  /// Unbiased (n-1) sample variance when unweighted; weighted second central moment otherwise.
  double variance() const;

  /// Union of two unweighted sample sets.
  static EmpiricalMeasure1D merge(const EmpiricalMeasure1D& a, const EmpiricalMeasure1D& b);

 private:
  std::vector<double> samples_;
  std::vector<double> cumulative_;  // cumulative_[i] = mass of samples_[0..i]
  bool weighted_ = false;
};

/// Trapezoid-weighted states of one trajectory after burn-in; weights sum to 1.
struct OccupationMeasure {
  std::vector<State3> points;
  std::vector<double> weights;

  EmpiricalMeasure1D marginal(int coordinate) const;
};

OccupationMeasure occupation_measure(const Trajectory& traj, double burn_in_frac);

/// (1/(t - t0)) \int_{t0}^{t} X ds by the trapezoid rule over recorded points, t0 = burn-in.
double time_average_X(const Trajectory& traj, double burn_in_frac);

/// Trapezoid averages of X over `windows` equal index windows after burn-in.
std::vector<double> windowed_X_averages(const Trajectory& traj, double burn_in_frac,
                                        int windows);

struct E55Check {
  double bound = 0.0;     // lambda1 * rho
  double observed = 0.0;  // finite-horizon liminf proxy
  bool pass = false;
};

inline constexpr double kDefaultBurnIn = 0.5;
inline constexpr double kDefaultE55Tolerance = 0.05;

/// 0.8 (kappa/lambda1 - min(lambda2, lambda3)).
double default_rho(const MineaParams& p);

/// Lower bound on the long-time average of X in the supercritical regime.
/// `observed` is the minimum of the four quarter-window averages of X after
/// burn-in, a finite-horizon stand-in for the liminf; pass iff
/// observed >= lambda1 rho (1 - tolerance). Requires 0 < rho < kappa/l1 - min(l2, l3).
E55Check e55_check(const Trajectory& traj, const MineaParams& p, double rho,
                   double tolerance = kDefaultE55Tolerance, double burn_in_frac = kDefaultBurnIn);

/// Endpoint samples of coordinate 1, 2 or 3 at time T over n_traj trajectories.
EmpiricalMeasure1D ensemble_law(const MineaParams& p, const State3& v, double t_end, double dt,
                                std::size_t n_traj, std::uint64_t seed, int coordinate,
                                Scheme scheme = Scheme::exp);

/// sup_x |F_emp(x) - F(x)| against a Gaussian; requires law.variance > 0.
double ks_distance(const EmpiricalMeasure1D& emp, const GaussianLaw1D& law);
/// KS distance against the point mass at `at`, treating samples within `tol` of it as equal.
double ks_distance_point_mass(const EmpiricalMeasure1D& emp, double at, double tol);
double ks_two_sample(const EmpiricalMeasure1D& a, const EmpiricalMeasure1D& b);

/// Survival function of the Kolmogorov distribution, P(K > x).
double kolmogorov_sf(double x);
/// Upper alpha quantile of the Kolmogorov distribution (1.6276 at alpha = 0.01).
double kolmogorov_critical(double alpha);
double ks_critical(std::size_t n, double alpha);
double ks_critical_two_sample(std::size_t n, std::size_t m, double alpha);

struct DualBasinResult {
  EmpiricalMeasure1D lawA;  // u1 endpoints from v = (0,0,0)
  EmpiricalMeasure1D lawB;  // u1 endpoints from v = (0,1,0)
  double ks_between = 0.0;
  double critical = 0.0;  // two-sample 0.1% critical value
  double meanA = 0.0;
  double meanB = 0.0;
  bool separated = false;
};

/// Trajectories of basin A use stream indices [0, n), basin B [n, 2n).
DualBasinResult dual_basin_experiment(const MineaParams& p, double t_end, double dt,
                                      std::size_t n_traj, std::uint64_t seed,
                                      Scheme scheme = Scheme::exp);

enum class Verdict { unique_like, multi_like, inconclusive, error };

std::string_view to_string(Verdict v);

struct PhaseScanRow {
  double kappa = 0.0;
  double sigma = 0.0;
  Regime regime = Regime::subcritical;
  double ks_u1 = 1.0;
  double timeavg_X = 0.0;
  double e55_bound = 0.0;  // NaN outside the supercritical regime
  double e55_pass_fraction = 0.0;
  Verdict verdict = Verdict::inconclusive;
  std::string error;
};

struct PhaseScanConfig {
  double lambda1 = 1.0, lambda2 = 1.0, lambda3 = 1.0;
  std::vector<double> kappas;
  std::vector<double> sigmas;
  State3 initial{0.0, 1.0, 0.0};
  double t_end = 100.0;
  double dt = 1e-3;
  std::size_t n_traj = 500;
  std::uint64_t seed = 0;
  double burn_in_frac = kDefaultBurnIn;
  Scheme scheme = Scheme::exp;
  /// When set and raised, cells not yet started are dropped from the result.
  const std::atomic<bool>* cancel = nullptr;
};

/// Rows in (kappa-major, sigma-minor) order. Trajectory j of every cell uses
/// stream (seed, j).
std::vector<PhaseScanRow> phase_scan(const PhaseScanConfig& cfg);

}  // namespace minea
