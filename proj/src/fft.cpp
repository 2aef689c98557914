#include "fft.hpp"

#include <fftw3.h>

#include <mutex>

namespace rdtf::detail {

namespace {

// planner calls are not thread-safe in FFTW
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

void transform(const TorusGrid& grid, Spectrum& data, int sign) {
  int dims[kMaxDim];
  for (int a = 0; a < grid.dim(); ++a) dims[a] = grid.res();
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft(grid.dim(), dims, ptr, ptr, sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(plan);
}

}  // namespace

Spectrum fft_forward(const TorusGrid& grid, const double* src, int stride, int c) {
  Spectrum s(grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) s[p] = {src[p * stride + c], 0.0};
  transform(grid, s, FFTW_FORWARD);
  return s;
}

void fft_backward(const TorusGrid& grid, Spectrum spec, double* dst, int stride, int c) {
  transform(grid, spec, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) dst[p * stride + c] = spec[p].real() * scale;
}

}  // namespace rdtf::detail
