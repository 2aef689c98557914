#pragma once

// Rough, pinned initial metrics from random-phase spectra, and spectral mollification.

#include <cstdint>
#include <string>

#include "rdtf/grid.hpp"
#include "rdtf/tensor_core.hpp"

namespace rdtf {

enum class ComponentPattern { All, Diagonal, Conformal };

ComponentPattern parse_pattern(const std::string& name);
std::string pattern_name(ComponentPattern p);

struct RoughMetricSpec {
  double alpha = 2.5;        // amplitude law |k|^-alpha
  double amplitude = 0.05;   // eps_pin: target max-node |g0 - h|_h
  double eps0 = 0.1;         // amplitude must not exceed this
  std::uint64_t seed = 1;
  int k_max = 0;             // largest |k| in grid wave numbers; 0 means N/2 - 1
  ComponentPattern pattern = ComponentPattern::All;
};

/// Uniform [0, 1) variate attached to (seed, stream, wave vector). Independent of the grid,
/// so the same mode gets the same phase at every resolution.
double mode_uniform(std::uint64_t seed, int stream, const int* m, int dim);

/// Real periodic field sum over 0 < |m| <= k_max of |m|^-alpha cos(2 pi m.x / L + phase_m).
ScalarField random_phase_field(const TorusGrid& grid, double alpha, int k_max, std::uint64_t seed, int stream);

/// 1 + contrast * f / max|f| with f a random-phase field of k_max modes (decay 2); strictly positive
/// for contrast < 1.
ScalarField positive_band_limited(const TorusGrid& grid, int k_max, std::uint64_t seed, int stream,
                                  double contrast = 0.8);

/// g0 = h + P with P rescaled so max-node |P|_h equals spec.amplitude.
MetricField generate_rough_metric(const RoughMetricSpec& spec, const BackgroundMetric& bg);

/// Componentwise spectral Gaussian: mode k is multiplied by exp(-s^2 |k|^2 / 2), |k| in inverse length.
MetricField mollify(const MetricField& g, double scale);

/// Spectral derivative d/dx^axis of a periodic field (Nyquist mode dropped).
ScalarField spectral_derivative(const ScalarField& f, int axis);

/// Pullback of the flat metric by Psi(x) = x + u(x) with a rough random-phase displacement u.
/// The displacement is scaled so that the result is spec.amplitude-pinned to delta.
struct PulledBackMetric {
  MetricField g;
  TensorField displacement;   // u^i
  double scale = 0.0;         // factor applied to the raw displacement
};
PulledBackMetric pulled_back_flat_metric(const RoughMetricSpec& spec, const TorusGrid& grid);

}  // namespace rdtf
