#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles/symbolic_oracles.hpp"
#include "rdtf/curvature.hpp"
#include "rdtf/errors.hpp"
#include "rdtf/initial_data.hpp"
#include "test_support.hpp"

using namespace rdtf;

namespace {

struct Case {
  const char* name;
  int dim;
  std::vector<int> res;
  test::OracleFn metric, ricci, scalar, ll, diff;
};

const Case kCases[] = {
    {"sine2", 2, {64, 128, 256}, oracle::sine2_metric, oracle::sine2_ricci, oracle::sine2_scalar,
     oracle::sine2_lee_lefloch, oracle::sine2_difference_tensor},
    {"conformal2", 2, {64, 128, 256}, oracle::conformal2_metric, oracle::conformal2_ricci, oracle::conformal2_scalar,
     oracle::conformal2_lee_lefloch, oracle::conformal2_difference_tensor},
    {"aniso2", 2, {64, 128, 256}, oracle::aniso2_metric, oracle::aniso2_ricci, oracle::aniso2_scalar,
     oracle::aniso2_lee_lefloch, oracle::aniso2_difference_tensor},
    {"conformal3", 3, {16, 32}, oracle::conformal3_metric, oracle::conformal3_ricci, oracle::conformal3_scalar,
     oracle::conformal3_lee_lefloch, oracle::conformal3_difference_tensor},
};

ScalarField bump(const TorusGrid& grid) {
  return ScalarField::from_function(grid, [](auto x) { return 1.0 + 0.5 * std::sin(x[0]) * std::cos(x[1]); });
}

}  // namespace

TEST_CASE("flat and constant metrics have no curvature") {
  const TorusGrid grid(3, 8);
  MetricField c = MetricField::scaled_identity(grid, 1.5);
  for (std::size_t p = 0; p < grid.size(); ++p) c(p, 0, 2) = 0.1;
  CHECK(ricci(c).max_abs() == 0.0);
  CHECK(scalar_curvature(c).max_abs() == 0.0);
  const BackgroundMetric bg = flat_background(grid);
  const LeeLeFlochTerms t = lee_lefloch_terms(MetricField::scaled_identity(grid, 1.5), bg);
  CHECK(t.T.max_abs() == 0.0);
  CHECK(t.L.max_abs() == 0.0);
  CHECK(t.Z.max_abs() == 0.0);
  CHECK(t.vol_ratio.min() == doctest::Approx(std::pow(1.5, 1.5)).epsilon(1e-14));
  const LeeLeFlochTerms th = lee_lefloch_terms(bg.h, bg);
  CHECK(th.vol_ratio.min() == 1.0);
  CHECK(th.vol_ratio.max() == 1.0);
}

TEST_CASE("curvature quantities match symbolic oracles at fourth order") {
  for (const Case& cs : kCases) {
    CAPTURE(cs.name);
    const int n = cs.dim;
    std::vector<double> e_ric, e_r, e_l, e_z, e_t, e_v;
    for (int res : cs.res) {
      const TorusGrid grid(n, res);
      const MetricField g = test::sample_metric(grid, cs.metric);
      const TensorField ric = ricci(g);
      e_ric.push_back(test::max_error(grid, cs.ricci, packed_size(n), [&](std::size_t p, int c) {
        int i = 0, j = 0, k = 0;
        for (i = 0; i < n; ++i)
          for (j = i; j < n; ++j, ++k)
            if (k == c) return ric.at(p, i * n + j);
        return 0.0;
      }));
      const ScalarField R = scalar_curvature(g);
      e_r.push_back(test::max_error(grid, cs.scalar, 1, [&](std::size_t p, int) { return R[p]; }));
      const LeeLeFlochTerms t = lee_lefloch_terms(g, flat_background(grid));
      e_l.push_back(test::max_error(grid, cs.ll, 1, [&](std::size_t p, int) { return t.L[p]; }));
      std::vector<double> buf(n + 2);
      double ez = 0.0, ev = 0.0;
      for (std::size_t p = 0; p < grid.size(); ++p) {
        const auto x = grid.position(p);
        cs.ll(x.data(), buf.data());
        for (int k = 0; k < n; ++k) ez = std::max(ez, std::abs(t.Z.at(p, k) - buf[1 + k]));
        ev = std::max(ev, std::abs(t.vol_ratio[p] - buf[1 + n]));
      }
      e_z.push_back(ez);
      e_v.push_back(ev);
      e_t.push_back(test::max_error(grid, cs.diff, n * n * n, [&](std::size_t p, int c) { return t.T.at(p, c); }));
    }
    CHECK(test::worst_order(e_ric) >= 3.5);
    CHECK(test::worst_order(e_r) >= 3.5);
    CHECK(test::worst_order(e_l) >= 3.5);
    CHECK(test::worst_order(e_z) >= 3.5);
    CHECK(test::worst_order(e_t) >= 3.5);
    CHECK(e_v.back() < 1e-14);
  }
}

TEST_CASE("classical conformal formulas") {
  // 2d: R = -2 e^{-2u} Lap u ; 3d: R = e^{-2u} (-4 Lap u - 2 |du|^2)
  SUBCASE("n = 2") {
    const TorusGrid grid(2, 128);
    auto u = [](double x0, double x1) { return 0.1 * std::sin(x0) + 0.05 * std::cos(2 * x1); };
    MetricField g(grid);
    for (std::size_t p = 0; p < grid.size(); ++p) {
      const auto x = grid.position(p);
      const double e = std::exp(2 * u(x[0], x[1]));
      g(p, 0, 0) = g(p, 1, 1) = e;
    }
    const ScalarField R = scalar_curvature(g);
    double err = 0.0;
    for (std::size_t p = 0; p < grid.size(); ++p) {
      const auto x = grid.position(p);
      const double lap = -0.1 * std::sin(x[0]) - 0.2 * std::cos(2 * x[1]);
      err = std::max(err, std::abs(R[p] + 2.0 * std::exp(-2 * u(x[0], x[1])) * lap));
    }
    CHECK(err < 5e-6);
  }
  SUBCASE("n = 3") {
    const TorusGrid grid(3, 32);
    MetricField g(grid);
    auto u = [](const std::array<double, 3>& x) { return 0.1 * std::sin(x[0]) + 0.05 * std::cos(x[1]) * std::sin(x[2]); };
    for (std::size_t p = 0; p < grid.size(); ++p) {
      const double e = std::exp(2 * u(grid.position(p)));
      g(p, 0, 0) = g(p, 1, 1) = g(p, 2, 2) = e;
    }
    const ScalarField R = scalar_curvature(g);
    double err = 0.0;
    for (std::size_t p = 0; p < grid.size(); ++p) {
      const auto x = grid.position(p);
      const double lap = -0.1 * std::sin(x[0]) - 0.1 * std::cos(x[1]) * std::sin(x[2]);
      const double g0 = 0.1 * std::cos(x[0]), g1 = -0.05 * std::sin(x[1]) * std::sin(x[2]),
                   g2 = 0.05 * std::cos(x[1]) * std::cos(x[2]);
      const double ref = std::exp(-2 * u(x)) * (-4 * lap - 2 * (g0 * g0 + g1 * g1 + g2 * g2));
      err = std::max(err, std::abs(R[p] - ref));
    }
    CHECK(err < 1e-4);
  }
}

TEST_CASE("pairing examples") {
  const TorusGrid grid(2, 64);
  const BackgroundMetric bg = flat_background(grid);
  const ScalarField phi = bump(grid);
  CHECK(distributional_pairing(bg.h, bg, phi, 1.0) == doctest::Approx(integrate(phi)).epsilon(1e-14));
  const MetricField g = test::sample_metric(grid, oracle::aniso2_metric);
  CHECK(distributional_pairing(g, bg, ScalarField(grid), 0.7) == 0.0);
  CHECK(smooth_pairing(bg.h, phi, 0.0) == 0.0);
  CHECK(smooth_pairing(bg.h, phi, 2.5) == doctest::Approx(2.5 * integrate(phi)).epsilon(1e-14));
  ScalarField neg = phi;
  neg[3] = -0.1;
  CHECK_THROWS_AS(distributional_pairing(g, bg, neg, 0.0), PreconditionError);
}

TEST_CASE("pairing is affine in b with slope the weighted volume") {
  const TorusGrid grid(2, 64);
  const BackgroundMetric bg = flat_background(grid);
  const MetricField g = test::sample_metric(grid, oracle::conformal2_metric);
  const ScalarField phi = bump(grid);
  const double p0 = distributional_pairing(g, bg, phi, 0.0);
  const double p1 = distributional_pairing(g, bg, phi, 1.0);
  const LeeLeFlochTerms t = lee_lefloch_terms(g, bg);
  ScalarField w(grid);
  for (std::size_t p = 0; p < grid.size(); ++p) w[p] = phi[p] * t.vol_ratio[p];
  CHECK(p1 - p0 == doctest::Approx(integrate(w)).epsilon(1e-12));
}

TEST_CASE("distributional and smooth pairings agree on smooth metrics") {
  for (auto metric : {oracle::aniso2_metric, oracle::conformal2_metric, oracle::sine2_metric}) {
    double prev = 0.0;
    for (int res : {64, 128, 256}) {
      const TorusGrid grid(2, res);
      const BackgroundMetric bg = flat_background(grid);
      const MetricField g = test::sample_metric(grid, metric);
      const ScalarField phi = bump(grid);
      const double d = distributional_pairing(g, bg, phi, 0.3);
      const double s = smooth_pairing(g, phi, 0.3);
      const double rel = std::abs(d - s) / (1.0 + std::abs(s));
      if (res == 128) CHECK(rel <= 1e-3);
      if (prev > 0.0) CHECK(rel <= prev / 4.0);
      prev = rel;
    }
  }
}

TEST_CASE("pairings agree on a curved background") {
  const TorusGrid grid(2, 128);
  const BackgroundMetric bg = background_curvature(perturbed_background_metric(grid, 0.05, {{1, 0}}));
  const MetricField g = test::sample_metric(grid, oracle::overE_metric);
  const ScalarField phi = bump(grid);
  const double d = distributional_pairing(g, bg, phi, 0.0);
  const double s = smooth_pairing(g, phi, 0.0);
  CHECK(std::abs(d - s) / (1.0 + std::abs(s)) <= 1e-3);
}

TEST_CASE("Gauss-Bonnet on the two-torus") {
  for (auto metric : {oracle::aniso2_metric, oracle::conformal2_metric}) {
    const TorusGrid grid(2, 128);
    const MetricField g = test::sample_metric(grid, metric);
    const ScalarField R = scalar_curvature(g);
    ScalarField absR = R;
    for (double& v : absR.values()) v = std::abs(v);
    const ScalarField vol = sqrt_det(g);
    CHECK(std::abs(integrate(R, vol)) <= 1e-6 * integrate(absR, vol));
  }
}

TEST_CASE("volume ratio of pinned metrics stays in the pinned band") {
  const TorusGrid grid(2, 64);
  const BackgroundMetric bg = flat_background(grid);
  RoughMetricSpec spec;
  spec.amplitude = 0.1;
  const ScalarField v = volume_ratio(generate_rough_metric(spec, bg), bg);
  CHECK(v.min() >= std::pow(0.9, 1.0));
  CHECK(v.max() <= std::pow(1.1, 1.0));
}
