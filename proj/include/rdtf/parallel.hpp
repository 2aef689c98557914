#pragma once

#include <cstddef>
#include <span>

namespace rdtf {

/// Sets the worker count for nodewise kernels (0 keeps the runtime default).
void set_thread_count(int threads);
int thread_count();

/// Keeps large field buffers in the heap between calls instead of returning them to the OS.
/// Call once at program start; a no-op outside glibc.
void tune_allocator();

/// Runs body(p) for p in [0, n). Iterations must be independent.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
  for (long long p = 0; p < count; ++p) body(static_cast<std::size_t>(p));
}

/// Fixed-shape pairwise summation. The reduction tree depends only on the length of
/// the input, so the result is bit-identical for any thread count.
double pairwise_sum(std::span<const double> values);

}  // namespace rdtf
