#include "rdtf/tensor_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "geometry_kernels.hpp"
#include "rdtf/errors.hpp"
#include "rdtf/parallel.hpp"
#include "rdtf/small_matrix.hpp"
#include "rdtf/stencil.hpp"

namespace rdtf {

namespace {

constexpr double kSpdRelativeTolerance = 1e-10;

std::size_t ipow(int n, int k) {
  std::size_t r = 1;
  for (int i = 0; i < k; ++i) r *= static_cast<std::size_t>(n);
  return r;
}

template <int D>
BackgroundMetric build_background(const MetricField& h) {
  const TorusGrid& grid = h.grid();
  BackgroundMetric bg;
  bg.h = h;
  bg.h_inv = inverse_metric_field(h);
  bg.sqrt_det = sqrt_det(h);
  bg.christoffel = TensorField(grid, {Slot::Up, Slot::Down, Slot::Down});
  bg.christoffel_grad = TensorField(grid, {Slot::Down, Slot::Up, Slot::Down, Slot::Down});
  bg.riemann = TensorField(grid, {Slot::Down, Slot::Down, Slot::Down, Slot::Down});
  bg.ricci = TensorField(grid, {Slot::Down, Slot::Down});

  // spatially constant h: connection and curvature are exactly zero, skip the stencils
  const std::size_t np = packed_size(D);
  bool constant = true;
  for (std::size_t i = np; i < h.values().size() && constant; ++i) constant = h.values()[i] == h.values()[i % np];
  if (constant) {
    bg.flat = true;
    bg.identity = h.values() == MetricField::scaled_identity(grid, 1.0).values();
    bg.riemann_grad = TensorField(grid, std::vector<Slot>(5, Slot::Down));
    return bg;
  }

  const Partials part = compute_partials(grid, h.values(), np, true);
  parallel_for(grid.size(), [&](std::size_t p) {
    double dg[D * D * D];
    double ddg[D * D * D * D];
    detail::unpack_partials<D>(part.first, part.second, p, dg, ddg);
    const Mat<D> hm = unpack<D>(h.node(p));
    const Mat<D> hinv = inverse<D>(hm);
    double* gamma = bg.christoffel.node(p);
    double* dgamma = bg.christoffel_grad.node(p);
    detail::christoffel_jet<D>(hinv, dg, ddg, gamma, dgamma);
    double riem[D * D * D * D];
    detail::riemann_up<D>(gamma, dgamma, riem);
    detail::ricci_from_riemann<D>(riem, bg.ricci.node(p));
    // Rm_{abcd} = h_{dm} R^m_{bac}
    double* rm = bg.riemann.node(p);
    for (int a = 0; a < D; ++a)
      for (int b = 0; b < D; ++b)
        for (int c = 0; c < D; ++c)
          for (int d = 0; d < D; ++d) {
            double s = 0.0;
            for (int m = 0; m < D; ++m) s += hm[d * D + m] * riem[((m * D + b) * D + a) * D + c];
            rm[((a * D + b) * D + c) * D + d] = s;
          }
  });

  bg.flat = std::all_of(bg.christoffel.values().begin(), bg.christoffel.values().end(),
                        [](double v) { return v == 0.0; }) &&
            std::all_of(bg.christoffel_grad.values().begin(), bg.christoffel_grad.values().end(),
                        [](double v) { return v == 0.0; });
  const MetricField delta = MetricField::scaled_identity(grid, 1.0);
  bg.identity = h.values() == delta.values();
  bg.riemann_grad = hcov_deriv(bg.riemann, bg);
  bg.K0 = tensor_norm_h(bg.riemann, bg).max();
  bg.K1 = tensor_norm_h(bg.riemann_grad, bg).max();
  return bg;
}

/// Multiplies slot s of every node's component array by the n x n matrix m (m[i*n+e] X^{..e..}).
void contract_slot(int n, int rank, int s, const double* m, const double* x, double* out) {
  const std::size_t ncomp = ipow(n, rank);
  std::size_t weight = ipow(n, rank - 1 - s);
  for (std::size_t c = 0; c < ncomp; ++c) {
    const int digit = static_cast<int>((c / weight) % n);
    const std::size_t base = c - digit * weight;
    double acc = 0.0;
    for (int e = 0; e < n; ++e) acc += m[digit * n + e] * x[base + e * weight];
    out[c] = acc;
  }
}

template <int D>
MetricJet build_jet(const MetricField& g, const BackgroundMetric& bg, bool with_hessian) {
  const TorusGrid& grid = g.grid();
  MetricJet jet;
  jet.dim = D;
  jet.grad.assign(grid.size() * D * D * D, 0.0);
  if (with_hessian) jet.hess.assign(grid.size() * D * D * D * D, 0.0);
  const Partials part = compute_partials(grid, g.values(), packed_size(D), with_hessian);
  const std::vector<Slot> slots{Slot::Down, Slot::Down};
  parallel_for(grid.size(), [&](std::size_t p) {
    double dg[D * D * D];
    double ddg[D * D * D * D];
    detail::unpack_partials<D>(part.first, part.second, p, dg, with_hessian ? ddg : nullptr);
    double* grad = jet.grad.data() + p * D * D * D;
    std::copy(dg, dg + D * D * D, grad);
    if (!bg.flat) {
      const Mat<D> gm = unpack<D>(g.node(p));
      for (int a = 0; a < D; ++a)
        detail::add_connection(D, slots, bg.christoffel.node(p), a, gm.data(), grad + a * D * D, D * D);
    }
    if (!with_hessian) return;
    double* hess = jet.hess.data() + p * D * D * D * D;
    std::copy(ddg, ddg + D * D * D * D, hess);
    if (bg.flat) return;
    const Mat<D> gm = unpack<D>(g.node(p));
    const double* gamma = bg.christoffel.node(p);
    const double* dgamma = bg.christoffel_grad.node(p);
    for (int a = 0; a < D; ++a)
      for (int b = 0; b < D; ++b) {
        double* out = hess + (a * D + b) * D * D;
        // d_a (Gamma-terms of hnabla_b g) = C_b(d_a Gamma, g) + C_b(Gamma, d_a g)
        detail::add_connection(D, slots, dgamma + a * D * D * D, b, gm.data(), out, D * D);
        detail::add_connection(D, slots, gamma, b, dg + a * D * D, out, D * D);
        // - Gamma^e_{ab} hnabla_e g + C_a(Gamma, hnabla_b g)
        for (int e = 0; e < D; ++e) {
          const double gab = gamma[(e * D + a) * D + b];
          for (int c = 0; c < D * D; ++c) out[c] -= gab * grad[e * D * D + c];
        }
        detail::add_connection(D, slots, gamma, a, grad + b * D * D, out, D * D);
      }
  });
  return jet;
}

}  // namespace

BackgroundMetric flat_background(const TorusGrid& grid) {
  return background_curvature(MetricField::scaled_identity(grid, 1.0));
}

BackgroundMetric background_curvature(const MetricField& h) {
  require_spd(h);
  return dispatch_dim(h.dim(), [&](auto d) { return build_background<decltype(d)::value>(h); });
}

MetricField perturbed_background_metric(const TorusGrid& grid, double amplitude,
                                        const std::vector<std::vector<int>>& modes) {
  if (modes.empty()) throw PreconditionError("perturbed background needs at least one mode");
  const double k0 = 2.0 * std::numbers::pi / grid.period();
  MetricField h(grid);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const auto x = grid.position(p);
    double s = 0.0;
    for (const auto& m : modes) {
      double phase = 0.0;
      for (int a = 0; a < grid.dim() && a < static_cast<int>(m.size()); ++a) phase += m[a] * x[a];
      s += std::sin(k0 * phase);
    }
    s /= static_cast<double>(modes.size());
    for (int i = 0; i < grid.dim(); ++i) h(p, i, i) = 1.0 + amplitude * s;
  }
  return h;
}

void require_spd(const MetricField& g) {
  const TorusGrid& grid = g.grid();
  dispatch_dim(g.dim(), [&](auto d) {
    constexpr int D = decltype(d)::value;
    for (std::size_t p = 0; p < grid.size(); ++p) {
      Mat<D> m = unpack<D>(g.node(p));
      const double tr = trace<D>(m);
      // smallest eigenvalue above the threshold iff the shifted matrix factors
      Mat<D> shifted = m, l;
      for (int i = 0; i < D; ++i) shifted[i * D + i] -= kSpdRelativeTolerance * std::abs(tr) / D;
      if (std::isfinite(tr) && cholesky<D>(shifted, l)) continue;
      throw SpdError(p, symmetric_eigenvalues<D>(m)[0]);
    }
  });
}

MetricField inverse_metric_field(const MetricField& g) {
  require_spd(g);
  MetricField inv(g.grid());
  dispatch_dim(g.dim(), [&](auto d) {
    constexpr int D = decltype(d)::value;
    parallel_for(g.grid().size(), [&](std::size_t p) { pack<D>(inverse<D>(unpack<D>(g.node(p))), inv.node(p)); });
  });
  return inv;
}

TensorField metric_inverse(const MetricField& g) { return inverse_metric_field(g).to_tensor(); }

ScalarField sqrt_det(const MetricField& g) {
  ScalarField out(g.grid());
  dispatch_dim(g.dim(), [&](auto d) {
    constexpr int D = decltype(d)::value;
    parallel_for(g.grid().size(), [&](std::size_t p) { out[p] = std::sqrt(determinant<D>(unpack<D>(g.node(p)))); });
  });
  return out;
}

TensorField hcov_deriv(const TensorField& t, const BackgroundMetric& bg) {
  require_same_grid(t.grid(), bg.grid(), "hcov_deriv");
  const TorusGrid& grid = t.grid();
  const int n = grid.dim();
  std::vector<Slot> slots{Slot::Down};
  slots.insert(slots.end(), t.slots().begin(), t.slots().end());
  TensorField out(grid, slots);
  const std::size_t nc = t.components();
  for (int a = 0; a < n; ++a)
    first_derivative(grid, a, t.values().data(), static_cast<int>(nc), static_cast<int>(nc),
                     out.values().data() + a * nc, static_cast<int>(n * nc));
  if (!bg.flat) {
    parallel_for(grid.size(), [&](std::size_t p) {
      for (int a = 0; a < n; ++a)
        detail::add_connection(n, t.slots(), bg.christoffel.node(p), a, t.node(p), out.node(p) + a * nc, nc);
    });
  }
  return out;
}

TensorField hcov_hessian(const TensorField& t, const BackgroundMetric& bg) {
  require_same_grid(t.grid(), bg.grid(), "hcov_hessian");
  const TorusGrid& grid = t.grid();
  const int n = grid.dim();
  const std::size_t nc = t.components();
  std::vector<Slot> slots{Slot::Down, Slot::Down};
  slots.insert(slots.end(), t.slots().begin(), t.slots().end());
  TensorField out(grid, slots);
  const Partials part = compute_partials(grid, t.values(), static_cast<int>(nc), true);
  parallel_for(grid.size(), [&](std::size_t p) {
    double* o = out.node(p);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (std::size_t c = 0; c < nc; ++c) o[(a * n + b) * nc + c] = part.d2(p, a, b, static_cast<int>(c));
    if (bg.flat) return;
    const double* gamma = bg.christoffel.node(p);
    const double* dgamma = bg.christoffel_grad.node(p);
    std::vector<double> dt(n * nc), nab(n * nc);
    for (int b = 0; b < n; ++b)
      for (std::size_t c = 0; c < nc; ++c) dt[b * nc + c] = part.d1(p, b, static_cast<int>(c));
    nab = dt;
    for (int b = 0; b < n; ++b) detail::add_connection(n, t.slots(), gamma, b, t.node(p), nab.data() + b * nc, nc);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        double* ob = o + (a * n + b) * nc;
        detail::add_connection(n, t.slots(), dgamma + a * n * n * n, b, t.node(p), ob, nc);
        detail::add_connection(n, t.slots(), gamma, b, dt.data() + a * nc, ob, nc);
        for (int e = 0; e < n; ++e) {
          const double gab = gamma[(e * n + a) * n + b];
          for (std::size_t c = 0; c < nc; ++c) ob[c] -= gab * nab[e * nc + c];
        }
        detail::add_connection(n, t.slots(), gamma, a, nab.data() + b * nc, ob, nc);
      }
  });
  return out;
}

ScalarField tensor_norm_h(const TensorField& t, const BackgroundMetric& bg) {
  require_same_grid(t.grid(), bg.grid(), "tensor_norm_h");
  const TorusGrid& grid = t.grid();
  const int n = grid.dim();
  const int rank = t.rank();
  const std::size_t nc = t.components();
  ScalarField out(grid);
  parallel_for(grid.size(), [&](std::size_t p) {
    std::vector<double> a(t.node(p), t.node(p) + nc), b(nc);
    double hm[9], him[9];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        hm[i * n + j] = bg.h(p, i, j);
        him[i * n + j] = bg.h_inv(p, i, j);
      }
    for (int s = 0; s < rank; ++s) {
      contract_slot(n, rank, s, t.slots()[s] == Slot::Down ? him : hm, a.data(), b.data());
      a.swap(b);
    }
    double acc = 0.0;
    for (std::size_t c = 0; c < nc; ++c) acc += a[c] * t.node(p)[c];
    out[p] = std::sqrt(std::max(acc, 0.0));
  });
  return out;
}

double integrate(const ScalarField& f, const ScalarField& vol) {
  require_same_grid(f.grid(), vol.grid(), "integrate");
  std::vector<double> prod(f.size());
  for (std::size_t p = 0; p < f.size(); ++p) prod[p] = f[p] * vol[p];
  return pairwise_sum(prod) * f.grid().cell_volume();
}

double integrate(const ScalarField& f) { return pairwise_sum(f.values()) * f.grid().cell_volume(); }

MetricJet metric_jet(const MetricField& g, const BackgroundMetric& bg, bool with_hessian) {
  require_same_grid(g.grid(), bg.grid(), "metric_jet");
  return dispatch_dim(g.dim(), [&](auto d) { return build_jet<decltype(d)::value>(g, bg, with_hessian); });
}

ScalarField grad_norm_sq(const MetricJet& jet, const BackgroundMetric& bg) {
  const TorusGrid& grid = bg.grid();
  ScalarField out(grid);
  const int n = jet.dim;
  parallel_for(grid.size(), [&](std::size_t p) {
    const double* t = jet.grad_at(p);
    double acc = 0.0;
    if (bg.identity) {
      for (int c = 0; c < n * n * n; ++c) acc += t[c] * t[c];
    } else {
      for (int a = 0; a < n; ++a)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            for (int b = 0; b < n; ++b)
              for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l)
                  acc += bg.h_inv(p, a, b) * bg.h_inv(p, i, k) * bg.h_inv(p, j, l) * t[(a * n + i) * n + j] *
                         t[(b * n + k) * n + l];
    }
    out[p] = acc;
  });
  return out;
}

ScalarField hess_norm_sq(const MetricJet& jet, const BackgroundMetric& bg) {
  if (jet.hess.empty()) throw PreconditionError("hess_norm_sq: jet has no Hessian");
  const TorusGrid& grid = bg.grid();
  const int n = jet.dim;
  const int nc = n * n * n * n;
  ScalarField out(grid);
  TensorField tmp(grid, {Slot::Down, Slot::Down, Slot::Down, Slot::Down});
  std::copy(jet.hess.begin(), jet.hess.end(), tmp.values().begin());
  if (bg.identity) {
    parallel_for(grid.size(), [&](std::size_t p) {
      const double* t = jet.hess_at(p);
      double acc = 0.0;
      for (int c = 0; c < nc; ++c) acc += t[c] * t[c];
      out[p] = acc;
    });
    return out;
  }
  const ScalarField nrm = tensor_norm_h(tmp, bg);
  for (std::size_t p = 0; p < grid.size(); ++p) out[p] = nrm[p] * nrm[p];
  return out;
}

ScalarField difference_norm(const MetricField& g, const MetricField& g_ref, const BackgroundMetric& bg) {
  require_same_grid(g.grid(), g_ref.grid(), "difference_norm");
  const TorusGrid& grid = g.grid();
  ScalarField out(grid);
  dispatch_dim(g.dim(), [&](auto dd) {
    constexpr int D = decltype(dd)::value;
    parallel_for(grid.size(), [&](std::size_t p) {
      Mat<D> d = unpack<D>(g.node(p));
      const Mat<D> r = unpack<D>(g_ref.node(p));
      for (int k = 0; k < D * D; ++k) d[k] -= r[k];
      double acc = 0.0;
      if (bg.identity) {
        for (int k = 0; k < D * D; ++k) acc += d[k] * d[k];
      } else {
        // |d|^2 = tr(h^-1 d h^-1 d)
        const Mat<D> hd = multiply<D>(unpack<D>(bg.h_inv.node(p)), d);
        for (int i = 0; i < D; ++i)
          for (int j = 0; j < D; ++j) acc += hd[i * D + j] * hd[j * D + i];
      }
      out[p] = std::sqrt(std::max(acc, 0.0));
    });
  });
  return out;
}

double pinning_deviation(const MetricField& g, const BackgroundMetric& bg) {
  require_same_grid(g.grid(), bg.grid(), "pinning_deviation");
  return dispatch_dim(g.dim(), [&](auto d) {
    constexpr int D = decltype(d)::value;
    double dev = 0.0;
    for (std::size_t p = 0; p < g.grid().size(); ++p) {
      const Vec<D> ev = bg.identity ? symmetric_eigenvalues<D>(unpack<D>(g.node(p)))
                                    : relative_eigenvalues<D>(unpack<D>(g.node(p)), unpack<D>(bg.h.node(p)));
      dev = std::max({dev, std::abs(ev[0] - 1.0), std::abs(ev[D - 1] - 1.0)});
    }
    return dev;
  });
}

double max_inverse_eigenvalue(const MetricField& g, const BackgroundMetric& bg) {
  require_same_grid(g.grid(), bg.grid(), "max_inverse_eigenvalue");
  return dispatch_dim(g.dim(), [&](auto d) {
    constexpr int D = decltype(d)::value;
    double lam = 0.0;
    for (std::size_t p = 0; p < g.grid().size(); ++p) {
      // eigenvalues of g^{-1} h are the reciprocals of those of h^{-1} g
      const Vec<D> ev = bg.identity ? symmetric_eigenvalues<D>(unpack<D>(g.node(p)))
                                    : relative_eigenvalues<D>(unpack<D>(g.node(p)), unpack<D>(bg.h.node(p)));
      if (!(ev[0] > 0.0)) throw SpdError(p, ev[0]);
      lam = std::max(lam, 1.0 / ev[0]);
    }
    return lam;
  });
}

}  // namespace rdtf
