#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles/symbolic_oracles.hpp"
#include "rdtf/errors.hpp"
#include "rdtf/small_matrix.hpp"
#include "rdtf/stencil.hpp"
#include "rdtf/tensor_core.hpp"
#include "test_support.hpp"

using namespace rdtf;
using std::numbers::pi;

TEST_CASE("grid rejects bad resolutions") {
  CHECK_THROWS_AS(TorusGrid(2, 12), PreconditionError);
  CHECK_THROWS_AS(TorusGrid(2, 4), PreconditionError);
  CHECK_THROWS_AS(TorusGrid(4, 16), PreconditionError);
  const TorusGrid g(3, 8, 1.0);
  CHECK(g.size() == 512);
  CHECK(g.node(g.indices(77)) == 77);
  CHECK(g.node({-1, 8, 9}) == g.node({7, 0, 1}));
}

TEST_CASE("packed symmetric storage round-trips") {
  const TorusGrid grid(3, 8);
  const MetricField g = test::random_spd(grid, 3);
  const MetricField back = MetricField::from_tensor(g.to_tensor());
  CHECK(back.values() == g.values());
  CHECK(packed_index(3, 2, 1) == packed_index(3, 1, 2));
  CHECK(packed_index(3, 2, 2) == 5);
}

TEST_CASE("hcov_deriv of a constant field vanishes exactly on flat background") {
  const TorusGrid grid(2, 16);
  const BackgroundMetric bg = flat_background(grid);
  TensorField t(grid, {Slot::Up, Slot::Down});
  for (std::size_t p = 0; p < grid.size(); ++p)
    for (std::size_t c = 0; c < t.components(); ++c) t.at(p, c) = 0.7 + 1.3 * c;
  const TensorField d = hcov_deriv(t, bg);
  CHECK(d.rank() == 3);
  CHECK(d.max_abs() == 0.0);
}

TEST_CASE("hcov_deriv of sin is fourth order") {
  auto error_at = [](int res) {
    const TorusGrid grid(2, res, 2.0);
    const BackgroundMetric bg = flat_background(grid);
    const double k = 2.0 * pi / grid.period();
    const ScalarField f = ScalarField::from_function(grid, [&](auto x) { return std::sin(k * x[0]); });
    TensorField t(grid, {});
    t.values() = f.values();
    const TensorField d = hcov_deriv(t, bg);
    double err = 0.0;
    for (std::size_t p = 0; p < grid.size(); ++p) {
      err = std::max(err, std::abs(d.at(p, 0) - k * std::cos(k * grid.coordinate(p, 0))));
      err = std::max(err, std::abs(d.at(p, 1)));
    }
    return err;
  };
  const double e16 = error_at(16), e32 = error_at(32), e64 = error_at(64);
  CHECK(e64 < 1e-4);
  CHECK(e16 / e32 >= 14.0);
  CHECK(e16 / e32 <= 18.0);
  CHECK(e32 / e64 >= 14.0);
  CHECK(e32 / e64 <= 18.0);
}

TEST_CASE("hcov_deriv is linear") {
  const TorusGrid grid(2, 16);
  const BackgroundMetric bg = background_curvature(perturbed_background_metric(grid, 0.05, {{1, 0}}));
  const TensorField t1 = test::random_spd(grid, 1).to_tensor();
  const TensorField t2 = test::random_spd(grid, 2).to_tensor();
  TensorField mix = t1;
  for (std::size_t i = 0; i < mix.values().size(); ++i) mix.values()[i] = 2.0 * t1.values()[i] - 0.5 * t2.values()[i];
  const TensorField d1 = hcov_deriv(t1, bg), d2 = hcov_deriv(t2, bg), dm = hcov_deriv(mix, bg);
  double err = 0.0;
  for (std::size_t i = 0; i < dm.values().size(); ++i)
    err = std::max(err, std::abs(dm.values()[i] - (2.0 * d1.values()[i] - 0.5 * d2.values()[i])));
  CHECK(err < 1e-11);
}

TEST_CASE("hcov_deriv rejects a mismatched grid") {
  const BackgroundMetric bg = flat_background(TorusGrid(2, 16));
  CHECK_THROWS_AS(hcov_deriv(TensorField::vector(TorusGrid(2, 32)), bg), StructuralError);
}

TEST_CASE("summation by parts holds to roundoff on flat background") {
  const TorusGrid grid(2, 32);
  const BackgroundMetric bg = flat_background(grid);
  const ScalarField f = ScalarField::from_function(grid, [](auto x) { return std::sin(x[0]) * std::cos(2 * x[1]) + 0.3; });
  TensorField x = TensorField::vector(grid);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const auto q = grid.position(p);
    x.at(p, 0) = std::cos(3 * q[1]) + std::sin(q[0] + q[1]);
    x.at(p, 1) = std::sin(2 * q[0]) * std::cos(q[1]);
  }
  const TensorField dx = hcov_deriv(x, bg);
  const TensorField df = gradient(f);
  ScalarField div(grid), pair(grid), f2(grid), x2(grid);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    div[p] = f[p] * (dx.at(p, 0 * 2 + 0) + dx.at(p, 1 * 2 + 1));
    pair[p] = df.at(p, 0) * x.at(p, 0) + df.at(p, 1) * x.at(p, 1);
    f2[p] = f[p] * f[p];
    x2[p] = x.at(p, 0) * x.at(p, 0) + x.at(p, 1) * x.at(p, 1);
  }
  const double scale = std::sqrt(integrate(f2) * integrate(x2));
  CHECK(std::abs(integrate(div) + integrate(pair)) <= 1e-10 * scale);
}

TEST_CASE("metric_inverse examples") {
  const TorusGrid grid(2, 8);
  const MetricField id = MetricField::scaled_identity(grid);
  const TensorField inv = metric_inverse(id);
  CHECK(inv.at(5, 0) == 1.0);
  CHECK(inv.at(5, 1) == 0.0);
  CHECK(inv.at(5, 3) == 1.0);

  MetricField d(grid);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    d(p, 0, 0) = 2.0;
    d(p, 1, 1) = 0.5;
  }
  const MetricField di = inverse_metric_field(d);
  CHECK(di(3, 0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(di(3, 1, 1) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(di(3, 0, 1) == 0.0);
}

TEST_CASE("metric_inverse of random SPD fields multiplies to identity") {
  for (int n = 1; n <= 3; ++n) {
    const TorusGrid grid(n, 8);
    const MetricField g = test::random_spd(grid, 10 + n, 0.8);
    const MetricField gi = inverse_metric_field(g);
    const MetricField gii = inverse_metric_field(gi);
    double err = 0.0, err2 = 0.0;
    for (std::size_t p = 0; p < grid.size(); ++p)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double s = 0.0;
          for (int k = 0; k < n; ++k) s += g(p, i, k) * gi(p, k, j);
          err = std::max(err, std::abs(s - (i == j ? 1.0 : 0.0)));
          err2 = std::max(err2, std::abs(gii(p, i, j) - g(p, i, j)) / std::abs(g(p, i, i)));
        }
    CHECK(err < 1e-12);
    CHECK(err2 < 1e-12);
  }
}

TEST_CASE("metric_inverse reports the failing node") {
  const TorusGrid grid(2, 8);
  MetricField g = MetricField::scaled_identity(grid);
  g(17, 0, 1) = 2.0;  // eigenvalues -1 and 3
  try {
    (void)metric_inverse(g);
    FAIL("expected SpdError");
  } catch (const SpdError& e) {
    CHECK(e.node() == 17);
    CHECK(e.smallest_eigenvalue() == doctest::Approx(-1.0));
  }
}

TEST_CASE("tensor_norm_h examples") {
  const TorusGrid grid(2, 8);
  const BackgroundMetric bg = flat_background(grid);
  TensorField t(grid, {Slot::Down, Slot::Down});
  CHECK(tensor_norm_h(t, bg).max_abs() == 0.0);
  for (std::size_t p = 0; p < grid.size(); ++p) t.at(p, 0) = 1.0;
  const ScalarField one = tensor_norm_h(t, bg);
  CHECK(one.min() == 1.0);
  CHECK(one.max() == 1.0);

  const TensorField r = test::random_spd(grid, 4).to_tensor();
  TensorField r3 = r;
  for (double& v : r3.values()) v *= -3.0;
  const ScalarField a = tensor_norm_h(r, bg), b = tensor_norm_h(r3, bg);
  for (std::size_t p = 0; p < grid.size(); ++p) CHECK(b[p] == doctest::Approx(3.0 * a[p]).epsilon(1e-14));

  // |v|_h for v = (1, 0) with h = 4 delta is 2; the covector dx^1 has norm 1/2
  const BackgroundMetric bg4 = background_curvature(MetricField::scaled_identity(grid, 4.0));
  TensorField v = TensorField::vector(grid), w = TensorField::covector(grid);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    v.at(p, 0) = 1.0;
    w.at(p, 0) = 1.0;
  }
  CHECK(tensor_norm_h(v, bg4)[0] == doctest::Approx(2.0));
  CHECK(tensor_norm_h(w, bg4)[0] == doctest::Approx(0.5));
}

TEST_CASE("integrate examples") {
  const TorusGrid g2(2, 16);
  const ScalarField one(g2, 1.0);
  CHECK(integrate(one, one) == doctest::Approx(4 * pi * pi).epsilon(1e-14));
  const ScalarField s = ScalarField::from_function(g2, [](auto x) { return std::sin(x[0]); });
  CHECK(std::abs(integrate(s, one)) < 1e-14);
  const TorusGrid g1(1, 16);
  const ScalarField s2 = ScalarField::from_function(g1, [](auto x) { return std::sin(x[0]) * std::sin(x[0]); });
  CHECK(integrate(s2, ScalarField(g1, 1.0)) == doctest::Approx(pi).epsilon(1e-14));
}

TEST_CASE("background curvature of flat and constant metrics vanishes") {
  const TorusGrid grid(3, 8);
  const BackgroundMetric flat = flat_background(grid);
  CHECK(flat.flat);
  CHECK(flat.identity);
  CHECK(flat.K0 == 0.0);
  CHECK(flat.K1 == 0.0);
  CHECK(flat.riemann.max_abs() == 0.0);
  const BackgroundMetric c = background_curvature(MetricField::scaled_identity(grid, 2.5));
  CHECK(c.flat);
  CHECK_FALSE(c.identity);
  CHECK(c.christoffel.max_abs() == 0.0);
  CHECK(c.riemann.max_abs() == 0.0);
}

TEST_CASE("perturbed background curvature matches the symbolic oracle at 4th order") {
  double prev = 0.0;
  for (int res : {64, 128, 256}) {
    const TorusGrid grid(2, res);
    const BackgroundMetric bg = background_curvature(perturbed_background_metric(grid, 0.05, {{1, 0}}));
    CHECK_FALSE(bg.flat);
    const double err = test::max_error(grid, oracle::bgE_riemann, 16, [&](std::size_t p, int c) { return bg.riemann.at(p, c); });
    const double err_ric = test::max_error(grid, oracle::bgE_ricci, 3, [&](std::size_t p, int c) {
      static constexpr int idx[3] = {0, 1, 3};
      return bg.ricci.at(p, idx[c]);
    });
    CHECK(err_ric < 1e-5);
    if (prev > 0.0) CHECK(test::observed_order(prev, err) >= 3.5);
    prev = err;
    CHECK(bg.K0 > 0.0);
  }
}

TEST_CASE("hcov_hessian is symmetric for a scalar on a curved background") {
  const TorusGrid grid(2, 32);
  const BackgroundMetric bg = background_curvature(perturbed_background_metric(grid, 0.05, {{1, 1}}));
  TensorField f(grid, {});
  for (std::size_t p = 0; p < grid.size(); ++p) f.at(p, 0) = std::sin(grid.coordinate(p, 0)) * std::cos(grid.coordinate(p, 1));
  const TensorField hs = hcov_hessian(f, bg);
  double asym = 0.0;
  for (std::size_t p = 0; p < grid.size(); ++p) asym = std::max(asym, std::abs(hs.at(p, 1) - hs.at(p, 2)));
  CHECK(asym < 1e-4);
}

TEST_CASE("pinning deviation of a scaled identity") {
  const TorusGrid grid(2, 8);
  const BackgroundMetric bg = flat_background(grid);
  CHECK(pinning_deviation(MetricField::scaled_identity(grid, 1.05), bg) == doctest::Approx(0.05));
  CHECK(max_inverse_eigenvalue(MetricField::scaled_identity(grid, 0.5), bg) == doctest::Approx(2.0));
}
