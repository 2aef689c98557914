#include "rdtf/initial_data.hpp"

#include <cmath>
#include <numbers>

#include "fft.hpp"
#include "rdtf/errors.hpp"
#include "rdtf/parallel.hpp"
#include "rdtf/small_matrix.hpp"

namespace rdtf {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

int effective_kmax(const TorusGrid& grid, int k_max) {
  const int cap = grid.res() / 2 - 1;
  if (k_max < 0) throw PreconditionError("k_max must be non-negative");
  if (k_max > cap) throw PreconditionError("k_max must stay below the Nyquist mode");
  return k_max == 0 ? cap : k_max;
}

// first nonzero entry positive
bool upper_half(const int* m, int n) {
  for (int a = 0; a < n; ++a) {
    if (m[a] > 0) return true;
    if (m[a] < 0) return false;
  }
  return false;
}

ScalarField filtered(const ScalarField& f, double scale) {
  const TorusGrid& grid = f.grid();
  detail::Spectrum s = detail::fft_forward(grid, f.values().data(), 1, 0);
  const double k0 = 2.0 * std::numbers::pi / grid.period();
  for (std::size_t p = 0; p < grid.size(); ++p) {
    double k2 = 0.0;
    for (int a = 0; a < grid.dim(); ++a) {
      const double k = k0 * detail::wave_index(grid.index(p, a), grid.res());
      k2 += k * k;
    }
    s[p] *= std::exp(-0.5 * scale * scale * k2);
  }
  ScalarField out(grid);
  detail::fft_backward(grid, std::move(s), out.values().data(), 1, 0);
  return out;
}

}  // namespace

ComponentPattern parse_pattern(const std::string& name) {
  if (name == "all") return ComponentPattern::All;
  if (name == "diagonal") return ComponentPattern::Diagonal;
  if (name == "conformal") return ComponentPattern::Conformal;
  throw PreconditionError("unknown component pattern '" + name + "'");
}

std::string pattern_name(ComponentPattern p) {
  switch (p) {
    case ComponentPattern::All:
      return "all";
    case ComponentPattern::Diagonal:
      return "diagonal";
    case ComponentPattern::Conformal:
      return "conformal";
  }
  return "?";
}

double mode_uniform(std::uint64_t seed, int stream, const int* m, int dim) {
  std::uint64_t h = splitmix(seed);
  h = splitmix(h ^ static_cast<std::uint64_t>(stream + 1));
  for (int a = 0; a < dim; ++a) h = splitmix(h ^ static_cast<std::uint64_t>(m[a] + 4096));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

ScalarField random_phase_field(const TorusGrid& grid, double alpha, int k_max, std::uint64_t seed, int stream) {
  if (!(alpha > 0.0)) throw PreconditionError("decay exponent must be positive");
  const int km = effective_kmax(grid, k_max);
  const int n = grid.dim();
  const double half = 0.5 * static_cast<double>(grid.size());
  detail::Spectrum spec(grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) {
    int m[kMaxDim] = {0, 0, 0};
    double m2 = 0.0;
    for (int a = 0; a < n; ++a) {
      m[a] = detail::wave_index(grid.index(p, a), grid.res());
      m2 += static_cast<double>(m[a]) * m[a];
    }
    if (!upper_half(m, n) || m2 > static_cast<double>(km) * km) continue;
    bool at_nyquist = false;
    for (int a = 0; a < n; ++a) at_nyquist |= (m[a] == -grid.res() / 2);
    if (at_nyquist) continue;
    const double phase = 2.0 * std::numbers::pi * mode_uniform(seed, stream, m, n);
    const std::complex<double> c = std::polar(half * std::pow(m2, -0.5 * alpha), phase);
    std::array<int, kMaxDim> idx{};
    for (int a = 0; a < n; ++a) idx[a] = (grid.res() - grid.index(p, a)) % grid.res();
    spec[p] = c;
    spec[grid.node(idx)] = std::conj(c);
  }
  ScalarField out(grid);
  detail::fft_backward(grid, std::move(spec), out.values().data(), 1, 0);
  return out;
}

ScalarField positive_band_limited(const TorusGrid& grid, int k_max, std::uint64_t seed, int stream, double contrast) {
  if (!(contrast >= 0.0 && contrast < 1.0)) throw PreconditionError("contrast must lie in [0, 1)");
  ScalarField f = random_phase_field(grid, 2.0, k_max, seed, stream);
  const double m = f.max_abs();
  for (double& v : f.values()) v = 1.0 + (m > 0.0 ? contrast * v / m : 0.0);
  return f;
}

MetricField generate_rough_metric(const RoughMetricSpec& spec, const BackgroundMetric& bg) {
  if (spec.amplitude < 0.0) throw PreconditionError("amplitude must be non-negative");
  if (spec.amplitude > spec.eps0) throw PreconditionError("amplitude exceeds eps0");
  const TorusGrid& grid = bg.grid();
  const int n = grid.dim();
  if (spec.amplitude == 0.0) return bg.h;
  MetricField P(grid);
  if (spec.pattern == ComponentPattern::Conformal) {
    const ScalarField f = random_phase_field(grid, spec.alpha, spec.k_max, spec.seed, 0);
    for (std::size_t p = 0; p < grid.size(); ++p)
      for (int c = 0; c < P.packed(); ++c) P.node(p)[c] = f[p] * bg.h.node(p)[c];
  } else {
    int stream = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j, ++stream) {
        if (spec.pattern == ComponentPattern::Diagonal && i != j) continue;
        const ScalarField f = random_phase_field(grid, spec.alpha, spec.k_max, spec.seed, stream);
        for (std::size_t p = 0; p < grid.size(); ++p) P(p, i, j) = f[p];
      }
  }
  const double size = tensor_norm_h(P.to_tensor(), bg).max();
  if (!(size > 0.0)) throw PreconditionError("rough perturbation vanished; cannot rescale");
  const double s = spec.amplitude / size;
  MetricField g = bg.h;
  for (std::size_t i = 0; i < g.values().size(); ++i) g.values()[i] += s * P.values()[i];
  return g;
}

MetricField mollify(const MetricField& g, double scale) {
  if (scale < 0.0) throw PreconditionError("mollifier scale must be non-negative");
  if (scale == 0.0) return g;
  const TorusGrid& grid = g.grid();
  MetricField out(grid);
  for (int c = 0; c < g.packed(); ++c) {
    ScalarField f(grid);
    for (std::size_t p = 0; p < grid.size(); ++p) f[p] = g.node(p)[c];
    const ScalarField m = filtered(f, scale);
    for (std::size_t p = 0; p < grid.size(); ++p) out.node(p)[c] = m[p];
  }
  return out;
}

ScalarField spectral_derivative(const ScalarField& f, int axis) {
  const TorusGrid& grid = f.grid();
  detail::Spectrum s = detail::fft_forward(grid, f.values().data(), 1, 0);
  const double k0 = 2.0 * std::numbers::pi / grid.period();
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const int m = detail::wave_index(grid.index(p, axis), grid.res());
    s[p] *= (m == -grid.res() / 2) ? std::complex<double>(0.0) : std::complex<double>(0.0, k0 * m);
  }
  ScalarField out(grid);
  detail::fft_backward(grid, std::move(s), out.values().data(), 1, 0);
  return out;
}

PulledBackMetric pulled_back_flat_metric(const RoughMetricSpec& spec, const TorusGrid& grid) {
  if (!(spec.amplitude > 0.0) || spec.amplitude > spec.eps0)
    throw PreconditionError("pulled-back metric needs 0 < amplitude <= eps0");
  const int n = grid.dim();
  const BackgroundMetric flat = flat_background(grid);
  // displacement decays one power faster so its derivative follows |k|^-alpha
  std::vector<ScalarField> u;
  std::vector<double> du;  // du[(p * n + i) * n + a] = d_a u^i
  du.assign(grid.size() * n * n, 0.0);
  for (int i = 0; i < n; ++i) {
    u.push_back(random_phase_field(grid, spec.alpha + 1.0, spec.k_max, spec.seed, 100 + i));
    for (int a = 0; a < n; ++a) {
      const ScalarField d = spectral_derivative(u[i], a);
      for (std::size_t p = 0; p < grid.size(); ++p) du[(p * n + i) * n + a] = d[p];
    }
  }
  auto metric_for = [&](double s) {
    MetricField g(grid);
    for (std::size_t p = 0; p < grid.size(); ++p)
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          double acc = 0.0;
          for (int a = 0; a < n; ++a) {
            const double dia = (a == i ? 1.0 : 0.0) + s * du[(p * n + a) * n + i];
            const double dja = (a == j ? 1.0 : 0.0) + s * du[(p * n + a) * n + j];
            acc += dia * dja;
          }
          g(p, i, j) = acc;
        }
    return g;
  };
  double maxdu = 0.0;
  for (double v : du) maxdu = std::max(maxdu, std::abs(v));
  if (!(maxdu > 0.0)) throw PreconditionError("rough displacement vanished; cannot rescale");
  // deviation grows monotonically with s on the small-s branch; bisect for the target
  double lo = 0.0, hi = spec.amplitude / maxdu;
  while (pinning_deviation(metric_for(hi), flat) < spec.amplitude) hi *= 2.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (pinning_deviation(metric_for(mid), flat) < spec.amplitude ? lo : hi) = mid;
  }
  PulledBackMetric out;
  out.scale = lo;
  out.g = metric_for(lo);
  out.displacement = TensorField::vector(grid);
  for (std::size_t p = 0; p < grid.size(); ++p)
    for (int i = 0; i < n; ++i) out.displacement.at(p, i) = lo * u[i][p];
  return out;
}

}  // namespace rdtf
