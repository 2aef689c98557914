#pragma once

// Thin FFTW wrapper for n-dimensional complex transforms on the torus grid.

#include <complex>
#include <vector>

#include "rdtf/grid.hpp"

namespace rdtf::detail {

using Spectrum = std::vector<std::complex<double>>;

/// Unnormalized forward transform of one real component (src[p * stride + c]).
Spectrum fft_forward(const TorusGrid& grid, const double* src, int stride, int c);
/// Inverse transform divided by N^n; writes the real part to dst[p * stride + c].
void fft_backward(const TorusGrid& grid, Spectrum spec, double* dst, int stride, int c);

/// Signed integer wave number of index i on an axis of n points; the Nyquist index maps to -n/2.
inline int wave_index(int i, int n) { return i < n / 2 ? i : i - n; }

}  // namespace rdtf::detail
