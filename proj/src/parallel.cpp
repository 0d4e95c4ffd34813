#include "minea/parallel.hpp"

#include <omp.h>

#include <atomic>
#include <cstdlib>
#include <string>
#include <vector>

namespace minea {

namespace {

std::atomic<int> g_override{0};

int env_workers() {
  const char* s = std::getenv(kWorkersEnv);
  if (s == nullptr) return 0;
  try {
    return std::max(0, std::stoi(s));
  } catch (...) {
    return 0;
  }
}

}  // namespace

int worker_count() {
  if (int n = g_override.load(); n > 0) return n;
  if (int n = env_workers(); n > 0) return n;
  return omp_get_max_threads();
}

void set_worker_count(int n) { g_override.store(n > 0 ? n : 0); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  std::vector<std::exception_ptr> errors(n);
  const long long count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(worker_count())
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace minea
