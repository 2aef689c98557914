#pragma once

// Fourth-order centered finite differences with periodic wrap.

#include <span>
#include <vector>

#include "rdtf/grid.hpp"

namespace rdtf {

namespace stencil {
// First derivative: (f[i-2] - 8 f[i-1] + 8 f[i+1] - f[i+2]) / (12 dx)
inline constexpr double kD1[5] = {1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0};
// Second derivative: (-f[i-2] + 16 f[i-1] - 30 f[i] + 16 f[i+1] - f[i+2]) / (12 dx^2)
inline constexpr double kD2[5] = {-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0};
}  // namespace stencil

/// d/dx^axis of `ncomp` interleaved components. src[p * src_stride + c] -> dst[p * dst_stride + c].
void first_derivative(const TorusGrid& grid, int axis, const double* src, int src_stride, int ncomp,
                      double* dst, int dst_stride);

/// d^2/(dx^axis)^2 with the compact five-point stencil.
void second_derivative(const TorusGrid& grid, int axis, const double* src, int src_stride, int ncomp,
                       double* dst, int dst_stride);

/// First and second partial derivatives of a set of interleaved components.
///
/// first[(p * n + a) * ncomp + c]            = d_a f_c
/// second[(p * P + packed(a, b)) * ncomp + c] = d_a d_b f_c,  P = n(n+1)/2
///
/// Pure second derivatives use the compact stencil, mixed ones compose two first
/// derivatives.
struct Partials {
  int dim = 0;
  int ncomp = 0;
  std::vector<double> first;
  std::vector<double> second;

  double d1(std::size_t p, int a, int c) const { return first[(p * dim + a) * ncomp + c]; }
  double d2(std::size_t p, int a, int b, int c) const {
    return second[(p * packed_size(dim) + packed_index(dim, a, b)) * ncomp + c];
  }
};

Partials compute_partials(const TorusGrid& grid, std::span<const double> values, int ncomp,
                          bool with_second);

/// Gradient of a scalar field as a covector field.
TensorField gradient(const ScalarField& f);

}  // namespace rdtf
