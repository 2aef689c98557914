#include <cmath>
#include <numbers>

#include "doctest.h"
#include "rdtf/errors.hpp"
#include "rdtf/initial_data.hpp"
#include "test_support.hpp"

using namespace rdtf;
using std::numbers::pi;

namespace {

double dirichlet(const MetricField& g, const BackgroundMetric& bg) {
  return integrate(grad_norm_sq(metric_jet(g, bg, false), bg));
}

double grad_power(const MetricField& g, const BackgroundMetric& bg, double q) {
  ScalarField s = grad_norm_sq(metric_jet(g, bg, false), bg);
  for (double& v : s.values()) v = std::pow(v, q / 2.0);
  return integrate(s);
}

}  // namespace

TEST_CASE("zero amplitude returns h exactly") {
  const TorusGrid grid(2, 32);
  const BackgroundMetric bg = background_curvature(perturbed_background_metric(grid, 0.05, {{1, 0}}));
  RoughMetricSpec spec;
  spec.amplitude = 0.0;
  CHECK(generate_rough_metric(spec, bg).values() == bg.h.values());
}

TEST_CASE("rough metric is deterministic in the seed and pinned") {
  const TorusGrid grid(2, 64);
  const BackgroundMetric bg = flat_background(grid);
  RoughMetricSpec spec;
  spec.seed = 42;
  const MetricField a = generate_rough_metric(spec, bg);
  const MetricField b = generate_rough_metric(spec, bg);
  CHECK(a.values() == b.values());
  spec.seed = 43;
  CHECK(generate_rough_metric(spec, bg).values() != a.values());

  MetricField diff(grid);
  for (std::size_t i = 0; i < a.values().size(); ++i) diff.values()[i] = a.values()[i] - bg.h.values()[i];
  CHECK(tensor_norm_h(diff.to_tensor(), bg).max() == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(pinning_deviation(a, bg) <= 0.05 * (1 + 1e-12));
}

TEST_CASE("pinning holds for every pattern and on curved backgrounds") {
  const TorusGrid grid(3, 16);
  const BackgroundMetric bg = background_curvature(perturbed_background_metric(grid, 0.04, {{1, 0, 0}, {0, 1, 1}}));
  for (auto pat : {ComponentPattern::All, ComponentPattern::Diagonal, ComponentPattern::Conformal}) {
    RoughMetricSpec spec;
    spec.pattern = pat;
    spec.amplitude = 0.08;
    const MetricField g = generate_rough_metric(spec, bg);
    CHECK(pinning_deviation(g, bg) <= 0.08 * (1 + 1e-12));
    if (pat == ComponentPattern::Diagonal) CHECK(g(5, 0, 1) == bg.h(5, 0, 1));
  }
  CHECK(parse_pattern("conformal") == ComponentPattern::Conformal);
  CHECK_THROWS_AS(parse_pattern("spiral"), PreconditionError);
}

TEST_CASE("rough metric rejects amplitudes above eps0 and bad cutoffs") {
  const BackgroundMetric bg = flat_background(TorusGrid(2, 16));
  RoughMetricSpec spec;
  spec.amplitude = 0.2;
  CHECK_THROWS_AS(generate_rough_metric(spec, bg), PreconditionError);
  spec.amplitude = 0.05;
  spec.k_max = 8;
  CHECK_THROWS_AS(generate_rough_metric(spec, bg), PreconditionError);
}

TEST_CASE("mode coefficients do not depend on the grid") {
  const ScalarField a = random_phase_field(TorusGrid(2, 32), 2.5, 7, 9, 0);
  const ScalarField b = random_phase_field(TorusGrid(2, 64), 2.5, 7, 9, 0);
  double err = 0.0;
  for (int i = 0; i < 32; ++i)
    for (int j = 0; j < 32; ++j)
      err = std::max(err, std::abs(a[i * 32 + j] - b[(2 * i) * 64 + 2 * j]));
  CHECK(err < 1e-12);
  // a single mode has the prescribed amplitude
  const ScalarField one = random_phase_field(TorusGrid(1, 16), 1.0, 1, 3, 0);
  CHECK(one.max() == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("alpha = 2.5 data: Dirichlet energy stable under refinement") {
  RoughMetricSpec spec;
  spec.alpha = 2.5;
  spec.seed = 7;
  const TorusGrid g1(2, 128), g2(2, 256);
  const BackgroundMetric b1 = flat_background(g1), b2 = flat_background(g2);
  const MetricField m1 = generate_rough_metric(spec, b1), m2 = generate_rough_metric(spec, b2);
  const double e1 = dirichlet(m1, b1), e2 = dirichlet(m2, b2);
  CHECK(e2 == doctest::Approx(e1).epsilon(0.05));
  MESSAGE("W^{1,6} integrals at N=128, 256: " << grad_power(m1, b1, 6) << " " << grad_power(m2, b2, 6));
}

// Random-phase spectra give Gaussian-like fields, which lie in every W^{1,p} once they lie in
// W^{1,2}; the sixth-power integral is expected to stay flat here. Kept visible, not enforced.
TEST_CASE("alpha = 2.5 data: W^{1,6} integral grows with N" * doctest::may_fail()) {
  RoughMetricSpec spec;
  spec.alpha = 2.5;
  spec.seed = 7;
  const TorusGrid g1(2, 128), g2(2, 256);
  const BackgroundMetric b1 = flat_background(g1), b2 = flat_background(g2);
  const double q1 = grad_power(generate_rough_metric(spec, b1), b1, 6);
  const double q2 = grad_power(generate_rough_metric(spec, b2), b2, 6);
  CHECK(q2 > 1.25 * q1);
}

TEST_CASE("mollify examples") {
  const TorusGrid grid(2, 32);
  const MetricField g = test::random_spd(grid, 8);
  CHECK(mollify(g, 0.0).values() == g.values());

  const MetricField c = MetricField::scaled_identity(grid, 1.3);
  const MetricField mc = mollify(c, 0.4);
  double err = 0.0;
  for (std::size_t i = 0; i < c.values().size(); ++i) err = std::max(err, std::abs(mc.values()[i] - c.values()[i]));
  CHECK(err < 1e-14);

  // single mode with s^2 |k|^2 / 2 = ln 2
  const double k = 2.0 * pi / grid.period();
  const double s = std::sqrt(2.0 * std::log(2.0)) / k;
  MetricField w = MetricField::scaled_identity(grid);
  for (std::size_t p = 0; p < grid.size(); ++p) w(p, 0, 0) += 0.1 * std::sin(k * grid.coordinate(p, 0));
  const MetricField mw = mollify(w, s);
  for (std::size_t p = 0; p < grid.size(); p += 11)
    CHECK(mw(p, 0, 0) - 1.0 == doctest::Approx(0.05 * std::sin(k * grid.coordinate(p, 0))).epsilon(1e-10));
  CHECK_THROWS_AS(mollify(w, -1.0), PreconditionError);
}

TEST_CASE("mollification converges monotonically in W^{1,2}") {
  const TorusGrid grid(2, 64);
  const BackgroundMetric bg = flat_background(grid);
  RoughMetricSpec spec;
  const MetricField g = generate_rough_metric(spec, bg);
  double prev = 1e300;
  for (double f : {0.2, 0.1, 0.05, 0.025}) {
    const MetricField m = mollify(g, f * grid.period() / grid.res() * 8);
    MetricField d(grid);
    for (std::size_t i = 0; i < d.values().size(); ++i) d.values()[i] = m.values()[i] - g.values()[i];
    const double w12 = dirichlet(d, bg) + integrate([&] {
      ScalarField s = difference_norm(m, g, bg);
      for (double& v : s.values()) v *= v;
      return s;
    }());
    CHECK(w12 < prev);
    prev = w12;
  }
}

TEST_CASE("mollify preserves pinning") {
  const TorusGrid grid(2, 64);
  const BackgroundMetric bg = flat_background(grid);
  RoughMetricSpec spec;
  spec.amplitude = 0.08;
  const MetricField g = generate_rough_metric(spec, bg);
  for (double s : {1.0, 2.0, 4.0}) {
    const MetricField m = mollify(g, s * grid.spacing());
    CHECK(pinning_deviation(m, bg) <= 0.08 * (1 + 1e-6));
  }
}

TEST_CASE("spectral derivative is exact on trigonometric polynomials") {
  const TorusGrid grid(2, 16, 3.0);
  const double k = 2.0 * pi / 3.0;
  const ScalarField f = ScalarField::from_function(grid, [&](auto x) { return std::sin(2 * k * x[1]); });
  const ScalarField d = spectral_derivative(f, 1);
  for (std::size_t p = 0; p < grid.size(); ++p)
    CHECK(d[p] == doctest::Approx(2 * k * std::cos(2 * k * grid.coordinate(p, 1))).epsilon(1e-12).scale(1.0));
}

TEST_CASE("pulled-back flat metric is pinned at the requested level") {
  const TorusGrid grid(2, 64);
  RoughMetricSpec spec;
  spec.amplitude = 0.001;
  const PulledBackMetric pb = pulled_back_flat_metric(spec, grid);
  CHECK(pinning_deviation(pb.g, flat_background(grid)) == doctest::Approx(0.001).epsilon(1e-9));
  CHECK(pb.displacement.max_abs() > 0.0);
}
