#include <doctest.h>

#include <atomic>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <vector>

#include "minea/ensemble.hpp"
#include "minea/errors.hpp"
#include "minea/measure_lab.hpp"

using namespace minea;

namespace {

Trajectory constant_trajectory(State3 u, int points) {
  Trajectory t;
  for (int i = 0; i < points; ++i) {
    t.times.push_back(0.1 * i);
    t.states.push_back(u);
  }
  return t;
}

// Alternating series for P(K > x), summed to 1000 terms.
double kolmogorov_sf_reference(double x) {
  double s = 0.0;
  for (int k = 1; k <= 1000; ++k) s += (k % 2 ? 2.0 : -2.0) * std::exp(-2.0 * k * k * x * x);
  return s;
}

}  // namespace

TEST_CASE("empirical measure") {
  const EmpiricalMeasure1D m({3.0, 1.0, 2.0, 2.0});
  CHECK(m.samples() == std::vector<double>{1, 2, 2, 3});
  CHECK(m.count() == 4);
  CHECK(m.cdf(0.5) == 0.0);
  CHECK(m.cdf(1.0) == 0.25);
  CHECK(m.cdf_left(2.0) == 0.25);
  CHECK(m.cdf(2.0) == 0.75);
  CHECK(m.cdf(2.5) == 0.75);
  CHECK(m.cdf(3.0) == 1.0);
  CHECK(m.mean() == 2.0);
  CHECK(m.variance() == doctest::Approx(2.0 / 3.0));

  RngStream s = make_stream(4, 0);
  std::vector<double> xs(500);
  for (auto& x : xs) x = s.gaussian();
  const EmpiricalMeasure1D e(xs);
  double prev = 0.0;
  for (double x = -4.0; x <= 4.0; x += 0.01) {
    const double f = e.cdf(x);
    CHECK(f >= prev);
    CHECK(e.cdf_left(x) <= f);
    prev = f;
  }

  const EmpiricalMeasure1D w({5.0, 1.0, 3.0}, {1.0, 2.0, 1.0});
  CHECK(w.weighted());
  CHECK(w.samples() == std::vector<double>{1, 3, 5});
  CHECK(w.cdf(1.0) == 0.5);
  CHECK(w.cdf(4.0) == 0.75);
  CHECK(w.cdf(5.0) == 1.0);
  CHECK(w.mean() == doctest::Approx(2.5));

  CHECK_THROWS_AS(EmpiricalMeasure1D(std::vector<double>{}), InvalidParameter);
  CHECK_THROWS_AS(EmpiricalMeasure1D({1.0}, {-1.0}), InvalidParameter);
  CHECK_THROWS_AS(EmpiricalMeasure1D({1.0, 2.0}, {1.0}), InvalidParameter);
  CHECK_THROWS_AS(EmpiricalMeasure1D::merge(w, m), InvalidParameter);
}

TEST_CASE("time averages of X") {
  CHECK(time_average_X(constant_trajectory({0.3, 0, 0}, 10), 0.5) == 0.0);
  CHECK(time_average_X(constant_trajectory({0.3, 1, 0}, 10), 0.5) == doctest::Approx(1.0));
  CHECK_THROWS_AS(time_average_X(constant_trajectory({0, 1, 0}, 1), 0.0), InvalidParameter);
  CHECK_THROWS_AS(time_average_X(constant_trajectory({0, 1, 0}, 10), 1.0), InvalidParameter);

  const MineaParams p{1, 1, 1, 2, 0};
  RngStream s = make_stream(1, 0);
  const Trajectory t = simulate(p, {0, 1, 0}, 200.0, 1e-3, Scheme::exp, s, 10);
  CHECK(std::abs(time_average_X(t, 0.5) - 1.0) < 1e-3);

  const auto w = windowed_X_averages(t, 0.5, 4);
  CHECK(w.size() == 4);
  for (double x : w) CHECK(std::abs(x - 1.0) < 1e-3);

  const OccupationMeasure occ = occupation_measure(t, 0.5);
  double total = 0.0;
  for (double x : occ.weights) {
    CHECK(x >= 0.0);
    total += x;
  }
  CHECK(std::abs(total - 1.0) < 1e-12);
}

TEST_CASE("e55_check") {
  const MineaParams p{1, 1, 1, 2, 0};
  RngStream s = make_stream(1, 0);
  const Trajectory t = simulate(p, {0, 1, 0}, 200.0, 1e-3, Scheme::exp, s, 10);
  const E55Check c = e55_check(t, p, 0.8);
  CHECK(c.pass);
  CHECK(c.bound == doctest::Approx(0.8));
  CHECK(std::abs(c.observed - 1.0) < 1e-3);
  CHECK(default_rho(p) == doctest::Approx(0.8));

  CHECK_THROWS_AS(e55_check(t, p, 0.0), InvalidParameter);
  CHECK_THROWS_AS(e55_check(t, p, 1.0), InvalidParameter);
  const MineaParams sub{1, 1, 1, 0.5, 0.3};
  CHECK_THROWS_AS(e55_check(t, sub, 0.1), InvalidParameter);

  // Stuck on the Gaussian axis: X = 0 fails the bound.
  RngStream a = make_stream(1, 1);
  const Trajectory axis = simulate({1, 1, 1, 2, 0.1}, {0, 0, 0}, 50.0, 1e-3, Scheme::exp, a, 10);
  CHECK_FALSE(e55_check(axis, {1, 1, 1, 2, 0.1}, 0.8).pass);

  // Noisy supercritical runs from the second basin.
  const MineaParams q{1, 1, 1, 2, 0.1};
  int passes = 0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    RngStream r = make_stream(3, i);
    passes += e55_check(simulate(q, {0, 1, 0}, 200.0, 1e-3, Scheme::exp, r, 10), q, 0.8).pass;
  }
  CHECK(passes >= 19);
}

TEST_CASE("ensemble_law") {
  const auto zero = ensemble_law({1, 1, 1, 1.5, 0.4}, {0, 0, 0}, 5.0, 1e-3, 20, 1, 2);
  for (double x : zero.samples()) CHECK(x == 0.0);

  const auto u2 = ensemble_law({1, 1, 1, 0.5, 0.3}, {0, 1, 1}, 100.0, 1e-3, 100, 1, 2);
  int small = 0;
  for (double x : u2.samples()) small += std::abs(x) < 1e-6;
  CHECK(small >= 95);

  // The exp scheme is exact on the axis, so a coarse step is enough here.
  const std::size_t n = 10000;
  const auto u1 = ensemble_law({1, 1, 1, 0, 1}, {0, 0, 0}, 20.0, 1e-2, n, 1, 1);
  CHECK(std::abs(u1.mean()) < 3.0 * std::sqrt(0.5 / n));
  CHECK(std::abs(u1.variance() / 0.5 - 1.0) < 0.05);

  CHECK_THROWS_AS(ensemble_law({1, 1, 1, 0, 1}, {0, 0, 0}, 1.0, 1e-2, 1, 1, 1), InvalidParameter);
  CHECK_THROWS_AS(ensemble_law({1, 1, 1, 0, 1}, {0, 0, 0}, 1.0, 1e-2, 10, 1, 4), InvalidParameter);
}

TEST_CASE("ensembles merge sample for sample") {
  EnsembleSpec whole{{1, 1, 1, 2, 0.3}, {0, 1, 0}, 2.0, 1e-3, Scheme::exp, 5, 0, 60};
  EnsembleSpec lo = whole, hi = whole;
  lo.count = 25;
  hi.first_index = 25;
  hi.count = 35;
  auto u1 = [](const std::vector<State3>& v) {
    std::vector<double> x;
    for (const auto& u : v) x.push_back(u.u1);
    return EmpiricalMeasure1D(x);
  };
  const auto merged =
      EmpiricalMeasure1D::merge(u1(ensemble_endpoints(lo)), u1(ensemble_endpoints(hi)));
  CHECK(merged.samples() == u1(ensemble_endpoints(whole)).samples());
}

TEST_CASE("ks_distance") {
  CHECK(ks_distance(EmpiricalMeasure1D({2.0}), {2.0, 0.5}) == 0.5);

  boost::math::normal_distribution<> nd;
  const int n = 1000;
  std::vector<double> q;
  for (int i = 1; i <= n; ++i) q.push_back(boost::math::quantile(nd, (i - 0.5) / n));
  CHECK(ks_distance(EmpiricalMeasure1D(q), {0.0, 1.0}) <= 1.0 / (2 * n) + 1e-6);

  RngStream s = make_stream(21, 0);
  std::vector<double> xs(10000);
  for (auto& x : xs) x = 2.0 + std::sqrt(0.5) * s.gaussian();
  const EmpiricalMeasure1D emp(xs);
  CHECK(ks_distance(emp, {2.0, 0.5}) < 1.63 / 100.0);
  CHECK(ks_distance(emp, {2.5, 0.5}) > 1.63 / 100.0);
  const double far = ks_distance(emp, {50.0, 0.01});
  CHECK(far <= 1.0);
  CHECK(far > 0.999);
  CHECK_THROWS_AS(ks_distance(emp, {2.0, 0.0}), InvalidParameter);

  const EmpiricalMeasure1D pm({1.0, 1.0, 1.0 + 1e-12, 1.5});
  CHECK(ks_distance_point_mass(pm, 1.0, 1e-9) == 0.25);
}

TEST_CASE("kolmogorov distribution and critical values") {
  for (double x = 0.3; x <= 3.0; x += 0.05)
    CHECK(std::abs(kolmogorov_sf(x) - kolmogorov_sf_reference(x)) < 1e-12);
  CHECK(kolmogorov_sf(0.0) == 1.0);
  CHECK(kolmogorov_critical(0.01) == doctest::Approx(1.62762).epsilon(1e-5));
  CHECK(kolmogorov_critical(0.05) == doctest::Approx(1.35810).epsilon(1e-5));
  CHECK(kolmogorov_critical(0.001) == doctest::Approx(1.94947).epsilon(1e-5));
  CHECK(ks_critical(10000, 0.01) == doctest::Approx(0.0162762).epsilon(1e-5));
  CHECK(ks_critical_two_sample(500, 500, 0.001) ==
        doctest::Approx(1.94947 * std::sqrt(2.0 / 500)).epsilon(1e-5));
  CHECK_THROWS_AS(kolmogorov_critical(0.0), InvalidParameter);
  CHECK_THROWS_AS(ks_critical(0, 0.01), InvalidParameter);
}

TEST_CASE("two-sample KS") {
  const EmpiricalMeasure1D a({1, 2, 3}), b({1, 2, 3}), c({10, 11});
  CHECK(ks_two_sample(a, b) == 0.0);
  CHECK(ks_two_sample(a, c) == 1.0);
  CHECK(ks_two_sample(EmpiricalMeasure1D({1, 3}), EmpiricalMeasure1D({2, 4})) == 0.5);
}

TEST_CASE("occupation measure of the axis process matches the Gaussian law") {
  const MineaParams p{1, 1, 1, 2, 1};
  RngStream s = make_stream(6, 0);
  const double t_end = 1e4 / p.lambda1;
  const Trajectory t = simulate(p, {2, 0, 0}, t_end, 1e-2, Scheme::exp, s, 1);
  const EmpiricalMeasure1D occ = occupation_measure(t, 0.0).marginal(1);
  // Samples decorrelate over ~2/lambda1 time units.
  const auto n_eff = static_cast<std::size_t>(p.lambda1 * t_end / 2.0);
  CHECK(ks_distance(occ, gaussian_invariant(p).first) < ks_critical(n_eff, 0.01));
}

TEST_CASE("law of large numbers for the axis process") {
  const MineaParams p{1, 1, 1, 1.5, 0.8};
  RngStream s = make_stream(7, 0);
  const double t_end = 1e3;
  const Trajectory t = simulate(p, {0, 0, 0}, t_end, 1e-2, Scheme::exp, s, 1);
  const double avg = occupation_measure(t, 0.0).marginal(1).mean();
  CHECK(std::abs(avg - 1.5) < 5.0 * p.sigma / std::sqrt(2.0 * p.lambda1 * t_end));
}

TEST_CASE("dual basin experiment") {
  CHECK_THROWS_AS(dual_basin_experiment({1, 1, 1, 0.5, 0.1}, 10.0, 1e-3, 10, 1), InvalidParameter);
  CHECK_THROWS_AS(dual_basin_experiment({1, 1, 1, 1.0, 0.1}, 10.0, 1e-3, 10, 1), InvalidParameter);

  const auto det = dual_basin_experiment({1, 1, 1, 2, 0}, 100.0, 1e-3, 4, 1);
  for (double x : det.lawA.samples()) CHECK(std::abs(x - 2.0) < 1e-9);
  for (double x : det.lawB.samples()) CHECK(std::abs(x - 1.0) < 1e-6);
  CHECK(det.ks_between == 1.0);

  const auto r = dual_basin_experiment({1, 1, 1, 2, 0.1}, 50.0, 1e-3, 100, 1);
  CHECK(r.separated);
  CHECK(std::abs(r.meanA - 2.0) < 0.05);
  CHECK(std::abs(r.meanB - 1.0) < 0.1);
  CHECK(r.critical == doctest::Approx(ks_critical_two_sample(100, 100, 0.001)));
}

TEST_CASE("phase scan") {
  PhaseScanConfig cfg;
  cfg.kappas = {0.5, 1.0, 2.0};
  cfg.sigmas = {0.1, 0.3};
  cfg.t_end = 200.0;
  cfg.n_traj = 20;
  cfg.seed = 3;
  const auto rows = phase_scan(cfg);
  REQUIRE(rows.size() == 6);
  CHECK(rows[0].kappa == 0.5);
  CHECK(rows[1].sigma == 0.3);
  for (const auto& r : rows) {
    CHECK(r.ks_u1 >= 0.0);
    CHECK(r.ks_u1 <= 1.0);
    CHECK(r.timeavg_X >= 0.0);
    if (r.kappa == 0.5) {
      CHECK(r.regime == Regime::subcritical);
      CHECK(r.verdict == Verdict::unique_like);
      CHECK(std::isnan(r.e55_bound));
    } else if (r.kappa == 1.0) {
      CHECK(r.regime == Regime::boundary);
      CHECK(r.verdict == Verdict::inconclusive);
    } else {
      CHECK(r.regime == Regime::supercritical);
      CHECK(r.verdict == Verdict::multi_like);
      CHECK(r.e55_bound == doctest::Approx(0.8));
    }
  }

  SUBCASE("noiseless cells compare against a point mass") {
    PhaseScanConfig d = cfg;
    d.kappas = {0.5};
    d.sigmas = {0.0};
    d.initial = {0, 0, 0};
    const auto r = phase_scan(d);
    REQUIRE(r.size() == 1);
    CHECK(r[0].ks_u1 == 0.0);
    CHECK(r[0].verdict == Verdict::unique_like);
  }
  SUBCASE("blow-up is recorded per cell") {
    PhaseScanConfig b = cfg;
    b.kappas = {0.5, 2000.0};
    b.sigmas = {0.1};
    b.scheme = Scheme::em;
    b.dt = 0.5;
    b.t_end = 20.0;
    const auto r = phase_scan(b);
    REQUIRE(r.size() == 2);
    CHECK(r[0].verdict != Verdict::error);
    CHECK(r[1].verdict == Verdict::error);
    CHECK(r[1].error.find("blow-up") != std::string::npos);
    CHECK(std::isnan(r[1].ks_u1));
  }
  SUBCASE("cancellation drops unstarted cells") {
    std::atomic<bool> stop{true};
    PhaseScanConfig c = cfg;
    c.cancel = &stop;
    CHECK(phase_scan(c).empty());
  }
  SUBCASE("errors") {
    PhaseScanConfig e = cfg;
    e.sigmas.clear();
    CHECK_THROWS_AS(phase_scan(e), InvalidParameter);
    e = cfg;
    e.kappas.clear();
    CHECK_THROWS_AS(phase_scan(e), InvalidParameter);
    e = cfg;
    e.sigmas = {-0.1};
    CHECK_THROWS_AS(phase_scan(e), InvalidParameter);
  }
  CHECK(to_string(Verdict::unique_like) == "unique-like");
  CHECK(to_string(Verdict::multi_like) == "multi-like");
}
