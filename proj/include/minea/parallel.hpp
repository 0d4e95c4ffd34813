#pragma once

#include <cstddef>
#include <exception>
#include <functional>

namespace minea {

/// Environment variable that sets the worker count.
inline constexpr const char* kWorkersEnv = "MINEA_ERGO_WORKERS";

/// Active worker count: set_worker_count override, else MINEA_ERGO_WORKERS,
/// else the OpenMP default.
int worker_count();
/// n <= 0 clears the override.
void set_worker_count(int n);

/// Runs body(i) for i in [0, n) across the worker pool. Every index is
/// attempted; if any throw, the exception from the lowest index is rethrown,
/// so failures are independent of the schedule.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace minea
