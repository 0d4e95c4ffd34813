// Serial reference kernels against their OpenMP counterparts.
//
//   minea_bench [repeats]
//
// Worker count follows MINEA_ERGO_WORKERS. Each pair is also checked for
// bitwise-equal output.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>

#include "minea/ensemble.hpp"
#include "minea/parallel.hpp"
#include "minea/spectral_nse.hpp"

namespace {

double best_seconds(int repeats, const std::function<void()>& f) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const std::chrono::duration<double> d = std::chrono::steady_clock::now() - t0;
    if (d.count() < best) best = d.count();
  }
  return best;
}

void report(const char* name, double serial, double parallel, bool equal) {
  std::printf("%-28s serial %9.4f s  parallel %9.4f s  speedup %5.2fx  %s\n", name, serial,
              parallel, serial / parallel, equal ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::atoi(argv[1]) : 3;
  std::printf("workers: %d\n", minea::worker_count());
  bool all_equal = true;

  {
    minea::EnsembleSpec spec;
    spec.params = {1.0, 1.0, 1.0, 2.0, 0.5};
    spec.initial = {0.0, 1.0, 0.0};
    spec.t_end = 10.0;
    spec.dt = 1e-3;
    spec.seed = 7;
    spec.count = 256;
    std::vector<minea::State3> a, b;
    const double ts = best_seconds(repeats, [&] { a = minea::ensemble_endpoints_serial(spec); });
    const double tp = best_seconds(repeats, [&] { b = minea::ensemble_endpoints(spec); });
    report("ensemble_endpoints", ts, tp, a == b);
    all_equal = all_equal && a == b;
  }

  {
    minea::nse::NseParams p;
    p.mu = 1.0;
    p.kappa = 0.5;
    p.sigma = 0.2;
    p.truncation = 4;
    minea::RngStream s(3, 0);
    const auto v = minea::nse::random_field(p.truncation, s, 1.0);
    minea::nse::EnergyPath a, b;
    const double ts = best_seconds(
        repeats, [&] { a = minea::nse::ensemble_energy_path_serial(p, v, 2.0, 1e-2, 32, 5, 10); });
    const double tp = best_seconds(
        repeats, [&] { b = minea::nse::ensemble_energy_path(p, v, 2.0, 1e-2, 32, 5, 10); });
    const bool eq = a.mean_energy == b.mean_energy;
    report("nse_energy_path", ts, tp, eq);
    all_equal = all_equal && eq;
  }

  {
    const int n = 16;
    minea::RngStream s(11, 0);
    const auto u = minea::nse::random_field(n, s, 1.0);
    const auto v = minea::nse::random_field(n, s, 1.0);
    minea::nse::SpectralField a(n), b(n);
    const double ts =
        best_seconds(repeats, [&] { a = minea::nse::bilinear_B_spectral_serial(u, v); });
    const double tp = best_seconds(repeats, [&] { b = minea::nse::bilinear_B_spectral(u, v); });
    bool eq = true;
    for (std::size_t i = 0; i < a.half().size(); ++i) eq = eq && a.half()[i] == b.half()[i];
    report("bilinear_B_spectral N=16", ts, tp, eq);
    all_equal = all_equal && eq;
  }
  return all_equal ? 0 : 1;
}
