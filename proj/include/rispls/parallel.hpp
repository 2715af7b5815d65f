#pragma once

#include <cstddef>
#include <cstdint>

namespace rispls {

// Worker-count policy. RISPLS_THREADS caps the number of OpenMP workers
// (default: hardware parallelism). BLAS is pinned to one thread per call;
// all multi-core parallelism is OpenMP so results do not depend on a
// second threading runtime.
void init_threading();

int max_threads();

// Force every kernel onto its serial reference path (used by tests and the
// benchmark). Returns the previous value.
bool set_force_serial(bool on);
bool force_serial();

// Runs fn(i) for i in [0, n) across OpenMP workers. Falls back to a plain
// loop when already inside a parallel region or when force_serial() is set.
template <typename F>
void parallel_for(std::size_t n, F&& fn);

}  // namespace rispls

#include <omp.h>

namespace rispls {

template <typename F>
void parallel_for(std::size_t n, F&& fn) {
  if (force_serial() || omp_in_parallel() || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    fn(static_cast<std::size_t>(i));
  }
}

}  // namespace rispls
