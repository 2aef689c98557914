#include "rdtf/curvature.hpp"

#include <cmath>

#include "geometry_kernels.hpp"
#include "rdtf/errors.hpp"
#include "rdtf/parallel.hpp"
#include "rdtf/small_matrix.hpp"
#include "rdtf/stencil.hpp"

namespace rdtf {

namespace {

template <int D>
void curvature_kernel(const MetricField& g, TensorField* ric_out, ScalarField* scalar, ScalarField* ric_sq) {
  const TorusGrid& grid = g.grid();
  const Partials part = compute_partials(grid, g.values(), packed_size(D), true);
  parallel_for(grid.size(), [&](std::size_t p) {
    double dg[D * D * D], ddg[D * D * D * D];
    detail::unpack_partials<D>(part.first, part.second, p, dg, ddg);
    const Mat<D> gi = inverse<D>(unpack<D>(g.node(p)));
    double gamma[D * D * D], dgamma[D * D * D * D], riem[D * D * D * D], ric[D * D];
    detail::christoffel_jet<D>(gi, dg, ddg, gamma, dgamma);
    detail::riemann_up<D>(gamma, dgamma, riem);
    detail::ricci_from_riemann<D>(riem, ric);
    // symmetrize: the coordinate formula is symmetric only up to roundoff in the mixed partials
    for (int i = 0; i < D; ++i)
      for (int j = i + 1; j < D; ++j) ric[i * D + j] = ric[j * D + i] = 0.5 * (ric[i * D + j] + ric[j * D + i]);
    if (ric_out) std::copy(ric, ric + D * D, ric_out->node(p));
    if (scalar) {
      double r = 0.0;
      for (int c = 0; c < D * D; ++c) r += gi[c] * ric[c];
      (*scalar)[p] = r;
    }
    if (ric_sq) {
      // |Ric|^2 = g^ik g^jl Ric_ij Ric_kl
      const Mat<D> m = multiply<D>(gi, Mat<D>(std::to_array(ric)));
      double s = 0.0;
      for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j) s += m[i * D + j] * m[j * D + i];
      (*ric_sq)[p] = s;
    }
  });
}

template <int D>
void lee_lefloch_kernel(const MetricField& g, const BackgroundMetric& bg, const MetricJet& jet, LeeLeFlochTerms& out) {
  const TorusGrid& grid = g.grid();
  parallel_for(grid.size(), [&](std::size_t p) {
    const Mat<D> gi = inverse<D>(unpack<D>(g.node(p)));
    const double* d1 = jet.grad_at(p);
    auto G1 = [&](int a, int i, int j) { return d1[(a * D + i) * D + j]; };
    double* T = out.T.node(p);
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j)
        for (int k = 0; k < D; ++k) {
          double s = 0.0;
          for (int l = 0; l < D; ++l) s += gi[i * D + l] * (G1(j, k, l) + G1(k, j, l) - G1(l, j, k));
          T[(i * D + j) * D + k] = 0.5 * s;
        }
    auto TT = [&](int i, int j, int k) { return T[(i * D + j) * D + k]; };
    // hnabla_k g^{ij} = -g^{ia} g^{jb} hnabla_k g_ab
    double dgi[D * D * D];
    for (int k = 0; k < D; ++k)
      for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j) {
          double s = 0.0;
          for (int a = 0; a < D; ++a)
            for (int b = 0; b < D; ++b) s += gi[i * D + a] * gi[j * D + b] * G1(k, a, b);
          dgi[(k * D + i) * D + j] = -s;
        }
    double L = 0.0;
    if (!bg.flat)
      for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j) L += gi[i * D + j] * bg.ricci.at(p, i * D + j);
    double trT[D];  // T^j_{ji}
    for (int i = 0; i < D; ++i) {
      double s = 0.0;
      for (int j = 0; j < D; ++j) s += TT(j, j, i);
      trT[i] = s;
    }
    for (int k = 0; k < D; ++k)
      for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j) L -= dgi[(k * D + i) * D + j] * TT(k, i, j);
    for (int i = 0; i < D; ++i)
      for (int k = 0; k < D; ++k) L += dgi[(k * D + i) * D + k] * trT[i];
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) {
        double s = 0.0;
        for (int l = 0; l < D; ++l) {
          s += trT[l] * TT(l, i, j);
          for (int k = 0; k < D; ++k) s -= TT(k, j, l) * TT(l, i, k);
        }
        L += gi[i * D + j] * s;
      }
    out.L[p] = L;
    for (int k = 0; k < D; ++k) {
      double s = 0.0;
      for (int i = 0; i < D; ++i) {
        for (int j = 0; j < D; ++j) s += gi[i * D + j] * TT(k, i, j);
        s -= gi[i * D + k] * trT[i];
      }
      out.Z.at(p, k) = s;
    }
  });
}

}  // namespace

TensorField ricci(const MetricField& g) {
  require_spd(g);
  TensorField out(g.grid(), {Slot::Down, Slot::Down});
  dispatch_dim(g.dim(), [&](auto d) { curvature_kernel<decltype(d)::value>(g, &out, nullptr, nullptr); });
  return out;
}

ScalarField scalar_curvature(const MetricField& g) {
  require_spd(g);
  ScalarField out(g.grid());
  dispatch_dim(g.dim(), [&](auto d) { curvature_kernel<decltype(d)::value>(g, nullptr, &out, nullptr); });
  return out;
}

void scalar_and_ricci_sq(const MetricField& g, ScalarField& scalar, ScalarField& ricci_sq) {
  require_spd(g);
  scalar = ScalarField(g.grid());
  ricci_sq = ScalarField(g.grid());
  dispatch_dim(g.dim(), [&](auto d) { curvature_kernel<decltype(d)::value>(g, nullptr, &scalar, &ricci_sq); });
}

ScalarField volume_ratio(const MetricField& g, const BackgroundMetric& bg) {
  require_same_grid(g.grid(), bg.grid(), "volume_ratio");
  ScalarField r = sqrt_det(g);
  for (std::size_t p = 0; p < r.size(); ++p) r[p] /= bg.sqrt_det[p];
  return r;
}

LeeLeFlochTerms lee_lefloch_terms(const MetricField& g, const BackgroundMetric& bg) {
  require_same_grid(g.grid(), bg.grid(), "lee_lefloch_terms");
  require_spd(g);
  const TorusGrid& grid = g.grid();
  LeeLeFlochTerms out;
  out.T = TensorField(grid, {Slot::Up, Slot::Down, Slot::Down});
  out.L = ScalarField(grid);
  out.Z = TensorField::vector(grid);
  out.vol_ratio = volume_ratio(g, bg);
  const MetricJet jet = metric_jet(g, bg, false);
  dispatch_dim(g.dim(), [&](auto d) { lee_lefloch_kernel<decltype(d)::value>(g, bg, jet, out); });
  return out;
}

double distributional_pairing(const MetricField& g, const BackgroundMetric& bg, const ScalarField& phi, double b) {
  require_same_grid(g.grid(), phi.grid(), "distributional_pairing");
  if (phi.min() < 0.0) throw PreconditionError("distributional_pairing: test function must be non-negative");
  const TorusGrid& grid = g.grid();
  const int n = grid.dim();
  const LeeLeFlochTerms t = lee_lefloch_terms(g, bg);
  ScalarField psi(grid);
  for (std::size_t p = 0; p < grid.size(); ++p) psi[p] = phi[p] * t.vol_ratio[p];
  const TensorField dpsi = gradient(psi);
  // h(Z, hnabla psi) = Z^a d_a psi for a scalar psi
  ScalarField integrand(grid);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    double zd = 0.0;
    for (int a = 0; a < n; ++a) zd += t.Z.at(p, a) * dpsi.at(p, a);
    integrand[p] = t.L[p] * psi[p] - zd + b * psi[p];
  }
  return integrate(integrand, bg.sqrt_det);
}

double smooth_pairing(const MetricField& g, const ScalarField& phi, double b) {
  require_same_grid(g.grid(), phi.grid(), "smooth_pairing");
  const ScalarField R = scalar_curvature(g);
  ScalarField f(g.grid());
  for (std::size_t p = 0; p < f.size(); ++p) f[p] = (R[p] + b) * phi[p];
  return integrate(f, sqrt_det(g));
}

}  // namespace rdtf
