#pragma once

// Small process-level helpers: a deterministic parallel loop and a monotonic
// timer. Parallelism only distributes independent work items; results must be
// written to disjoint slots so the outcome is identical at any thread count.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace pourplan {

// Linear-interpolation percentile, q in [0, 100]. Copies and sorts.
inline double percentile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("percentile: empty sample");
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(q, 0.0, 100.0) / 100.0 * (v.size() - 1);
  const std::size_t i = static_cast<std::size_t>(pos);
  if (i + 1 >= v.size()) return v.back();
  const double f = pos - i;
  return v[i] * (1.0 - f) + v[i + 1] * f;
}

inline int worker_count(std::size_t items) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("POURPLAN_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) hw = static_cast<unsigned>(v);
  }
  if (items < hw) hw = static_cast<unsigned>(items);
  return static_cast<int>(hw == 0 ? 1 : hw);
}

// Runs fn(i) for i in [0, items). Work is striped across workers; fn must
// only touch state owned by item i. Exceptions propagate from worker 0's
// rethrow slot (first captured wins by worker index).
template <typename Fn>
void parallel_for(std::size_t items, Fn&& fn) {
  const int workers = worker_count(items);
  if (workers <= 1) {
    for (std::size_t i = 0; i < items; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < items; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace pourplan
