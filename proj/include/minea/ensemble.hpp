#pragma once

// Trajectory ensembles. Trajectory i uses stream (seed, first_index + i), so
// the result is identical for any worker count and for any split of the index
// range. The *_serial variants are the single-threaded reference kernels.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "minea/minea_core.hpp"

namespace minea {

struct EnsembleSpec {
  MineaParams params;
  State3 initial;
  double t_end = 100.0;
  double dt = 1e-3;
  Scheme scheme = Scheme::exp;
  std::uint64_t seed = 0;
  std::uint64_t first_index = 0;
  std::size_t count = 0;
};

std::vector<State3> ensemble_endpoints(const EnsembleSpec& spec);
std::vector<State3> ensemble_endpoints_serial(const EnsembleSpec& spec);

/// Ensemble mean of |u(t)|^2 at the recorded times of every trajectory
/// (record_stride steps apart, final step included).
struct MomentPath {
  std::vector<double> times;
  std::vector<double> mean_norm2;
};

MomentPath ensemble_moment_path(const EnsembleSpec& spec, std::uint64_t record_stride);
MomentPath ensemble_moment_path_serial(const EnsembleSpec& spec, std::uint64_t record_stride);

}  // namespace minea
