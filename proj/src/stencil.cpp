#include "rdtf/stencil.hpp"

#include "rdtf/errors.hpp"
#include "rdtf/parallel.hpp"

namespace rdtf {

namespace {

// Written in paired form so constants differentiate to exactly zero.
struct FirstKernel {
  static double apply(const double* f, const std::ptrdiff_t* off, int st, int c) {
    return (8.0 * (f[off[3] * st + c] - f[off[1] * st + c]) - (f[off[4] * st + c] - f[off[0] * st + c])) / 12.0;
  }
};
struct SecondKernel {
  static double apply(const double* f, const std::ptrdiff_t* off, int st, int c) {
    return (16.0 * (f[off[3] * st + c] + f[off[1] * st + c]) - (f[off[4] * st + c] + f[off[0] * st + c]) -
            30.0 * f[off[2] * st + c]) / 12.0;
  }
};

template <class Kernel>
void apply_stencil(const TorusGrid& grid, int axis, const double* src, int src_stride, int ncomp,
                   double* dst, int dst_stride, double scale) {
  // walk lines along `axis`: node = hi * block + i * s + lo
  const int N = grid.res();
  const std::size_t s = grid.stride(axis);
  const std::size_t block = s * N;
  const std::size_t nblocks = grid.size() / block;
  parallel_for(nblocks * N, [&](std::size_t job) {
    const std::size_t hi = job / N;
    const int i = static_cast<int>(job % N);
    const std::size_t base = hi * block;
    std::ptrdiff_t off[5];
    for (int k = 0; k < 5; ++k) off[k] = static_cast<std::ptrdiff_t>(base + ((i + k - 2 + N) % N) * s);
    const std::size_t row = base + i * s;
    for (std::size_t lo = 0; lo < s; ++lo) {
      const std::ptrdiff_t o[5] = {off[0] + static_cast<std::ptrdiff_t>(lo), off[1] + static_cast<std::ptrdiff_t>(lo),
                                   off[2] + static_cast<std::ptrdiff_t>(lo), off[3] + static_cast<std::ptrdiff_t>(lo),
                                   off[4] + static_cast<std::ptrdiff_t>(lo)};
      double* d = dst + (row + lo) * dst_stride;
      for (int c = 0; c < ncomp; ++c) d[c] = Kernel::apply(src, o, src_stride, c) * scale;
    }
  });
}

}  // namespace

void first_derivative(const TorusGrid& grid, int axis, const double* src, int src_stride, int ncomp,
                      double* dst, int dst_stride) {
  apply_stencil<FirstKernel>(grid, axis, src, src_stride, ncomp, dst, dst_stride,
                              1.0 / grid.spacing());
}

void second_derivative(const TorusGrid& grid, int axis, const double* src, int src_stride, int ncomp,
                       double* dst, int dst_stride) {
  const double dx = grid.spacing();
  apply_stencil<SecondKernel>(grid, axis, src, src_stride, ncomp, dst, dst_stride, 1.0 / (dx * dx));
}

Partials compute_partials(const TorusGrid& grid, std::span<const double> values, int ncomp,
                          bool with_second) {
  if (values.size() != grid.size() * static_cast<std::size_t>(ncomp))
    throw StructuralError("compute_partials: value count does not match grid");
  const int n = grid.dim();
  Partials out;
  out.dim = n;
  out.ncomp = ncomp;
  out.first.assign(grid.size() * n * ncomp, 0.0);
  for (int a = 0; a < n; ++a)
    first_derivative(grid, a, values.data(), ncomp, ncomp, out.first.data() + a * ncomp, n * ncomp);
  if (!with_second) return out;

  const int np = packed_size(n);
  out.second.assign(grid.size() * np * ncomp, 0.0);
  for (int a = 0; a < n; ++a) {
    second_derivative(grid, a, values.data(), ncomp, ncomp,
                      out.second.data() + packed_index(n, a, a) * ncomp, np * ncomp);
    for (int b = a + 1; b < n; ++b)
      first_derivative(grid, b, out.first.data() + a * ncomp, n * ncomp, ncomp,
                       out.second.data() + packed_index(n, a, b) * ncomp, np * ncomp);
  }
  return out;
}

TensorField gradient(const ScalarField& f) {
  const TorusGrid& grid = f.grid();
  TensorField g = TensorField::covector(grid);
  for (int a = 0; a < grid.dim(); ++a)
    first_derivative(grid, a, f.values().data(), 1, 1, g.values().data() + a, grid.dim());
  return g;
}

}  // namespace rdtf
