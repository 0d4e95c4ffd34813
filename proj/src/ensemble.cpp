#include "minea/ensemble.hpp"

#include "minea/errors.hpp"
#include "minea/parallel.hpp"

namespace minea {

namespace {

State3 endpoint(const EnsembleSpec& s, std::size_t i) {
  RngStream stream = make_stream(s.seed, s.first_index + i);
  return propagate(s.params, s.initial, s.t_end, s.dt, s.scheme, stream);
}

std::vector<double> norm2_path(const EnsembleSpec& s, std::size_t i, std::uint64_t stride,
                               std::vector<double>* times) {
  RngStream stream = make_stream(s.seed, s.first_index + i);
  const Trajectory traj = simulate(s.params, s.initial, s.t_end, s.dt, s.scheme, stream, stride);
  std::vector<double> out;
  out.reserve(traj.states.size());
  for (const auto& u : traj.states) out.push_back(u.norm2());
  if (times != nullptr) *times = traj.times;
  return out;
}

MomentPath fold(std::vector<std::vector<double>> per_traj, std::vector<double> times) {
  MomentPath m;
  m.times = std::move(times);
  m.mean_norm2.assign(m.times.size(), 0.0);
  for (const auto& path : per_traj)
    for (std::size_t j = 0; j < path.size(); ++j) m.mean_norm2[j] += path[j];
  const double n = static_cast<double>(per_traj.size());
  for (auto& v : m.mean_norm2) v /= n;
  return m;
}

void check_count(const EnsembleSpec& s) {
  if (s.count == 0) throw InvalidParameter("ensemble: count must be at least 1");
}

}  // namespace

std::vector<State3> ensemble_endpoints(const EnsembleSpec& spec) {
  check_count(spec);
  std::vector<State3> out(spec.count);
  parallel_for(spec.count, [&](std::size_t i) { out[i] = endpoint(spec, i); });
  return out;
}

std::vector<State3> ensemble_endpoints_serial(const EnsembleSpec& spec) {
  check_count(spec);
  std::vector<State3> out(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) out[i] = endpoint(spec, i);
  return out;
}

MomentPath ensemble_moment_path(const EnsembleSpec& spec, std::uint64_t record_stride) {
  check_count(spec);
  std::vector<std::vector<double>> paths(spec.count);
  std::vector<double> times;
  parallel_for(spec.count, [&](std::size_t i) {
    paths[i] = norm2_path(spec, i, record_stride, i == 0 ? &times : nullptr);
  });
  return fold(std::move(paths), std::move(times));
}

MomentPath ensemble_moment_path_serial(const EnsembleSpec& spec, std::uint64_t record_stride) {
  check_count(spec);
  std::vector<std::vector<double>> paths(spec.count);
  std::vector<double> times;
  for (std::size_t i = 0; i < spec.count; ++i)
    paths[i] = norm2_path(spec, i, record_stride, i == 0 ? &times : nullptr);
  return fold(std::move(paths), std::move(times));
}

}  // namespace minea
