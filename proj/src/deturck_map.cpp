#include "rdtf/deturck_map.hpp"

#include <algorithm>
#include <cmath>

#include "rdtf/curvature.hpp"
#include "rdtf/errors.hpp"
#include "rdtf/parallel.hpp"
#include "rdtf/small_matrix.hpp"
#include "rdtf/stencil.hpp"

namespace rdtf {

namespace {

template <int D>
void deturck_kernel(const MetricField& g, const MetricJet& jet, TensorField& V) {
  parallel_for(g.grid().size(), [&](std::size_t p) {
    const Mat<D> gi = inverse<D>(unpack<D>(g.node(p)));
    const double* d1 = jet.grad_at(p);
    auto G1 = [&](int a, int i, int j) { return d1[(a * D + i) * D + j]; };
    // lowered difference tensor contracted with g^{bc}: g^{bc} (hnabla_b g_cl - 1/2 hnabla_l g_bc)
    double low[D];
    for (int l = 0; l < D; ++l) {
      double s = 0.0;
      for (int b = 0; b < D; ++b)
        for (int c = 0; c < D; ++c) s += gi[b * D + c] * (G1(b, c, l) - 0.5 * G1(l, b, c));
      low[l] = s;
    }
    for (int a = 0; a < D; ++a) {
      double s = 0.0;
      for (int l = 0; l < D; ++l) s += gi[a * D + l] * low[l];
      V.at(p, a) = -s;
    }
  });
}

/// Du[(p * n + i) * n + a] = d_a u^i
std::vector<double> displacement_gradient(const TensorField& u) {
  const TorusGrid& grid = u.grid();
  const int n = grid.dim();
  std::vector<double> du(grid.size() * n * n), tmp(grid.size() * n);
  for (int a = 0; a < n; ++a) {
    first_derivative(grid, a, u.values().data(), n, n, tmp.data(), n);
    for (std::size_t p = 0; p < grid.size(); ++p)
      for (int i = 0; i < n; ++i) du[(p * n + i) * n + a] = tmp[p * n + i];
  }
  return du;
}


}  // namespace

TensorField deturck_vector(const MetricField& g, const BackgroundMetric& bg) {
  require_same_grid(g.grid(), bg.grid(), "deturck_vector");
  require_spd(g);
  TensorField V = TensorField::vector(g.grid());
  const MetricJet jet = metric_jet(g, bg, false);
  dispatch_dim(g.dim(), [&](auto d) { deturck_kernel<decltype(d)::value>(g, jet, V); });
  return V;
}

void interpolate_periodic(const TorusGrid& grid, const double* values, int ncomp, const std::array<double, kMaxDim>& x,
                          double* out) {
  std::array<double, kMaxDim> s{};
  for (int a = 0; a < grid.dim(); ++a) s[a] = x[a] / grid.spacing();
  interpolate_grid_units(grid, values, ncomp, s, out);
}

void interpolate_grid_units(const TorusGrid& grid, const double* values, int ncomp, const std::array<double, kMaxDim>& pos,
                            double* out) {
  const int n = grid.dim();
  const int N = grid.res();
  int idx[kMaxDim][4];
  double w[kMaxDim][4];
  for (int a = 0; a < kMaxDim; ++a) {
    if (a >= n) {
      for (int k = 0; k < 4; ++k) {
        idx[a][k] = 0;
        w[a][k] = k == 0 ? 1.0 : 0.0;
      }
      continue;
    }
    const double s = pos[a];
    const double fl = std::floor(s);
    const double f = s - fl;
    long i0 = static_cast<long>(fl) % N;
    if (i0 < 0) i0 += N;
    for (int k = 0; k < 4; ++k) idx[a][k] = static_cast<int>((i0 - 1 + k + N) % N);
    w[a][0] = -f * (f - 1.0) * (f - 2.0) / 6.0;
    w[a][1] = (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0;
    w[a][2] = -(f + 1.0) * f * (f - 2.0) / 2.0;
    w[a][3] = (f + 1.0) * f * (f - 1.0) / 6.0;
  }
  for (int c = 0; c < ncomp; ++c) out[c] = 0.0;
  const int k1n = n >= 2 ? 4 : 1, k2n = n >= 3 ? 4 : 1;
  for (int k0 = 0; k0 < 4; ++k0)
    for (int k1 = 0; k1 < k1n; ++k1)
      for (int k2 = 0; k2 < k2n; ++k2) {
        const double wt = w[0][k0] * w[1][k1] * w[2][k2];
        std::size_t node = static_cast<std::size_t>(idx[0][k0]) * grid.stride(0);
        if (n >= 2) node += static_cast<std::size_t>(idx[1][k1]) * grid.stride(1);
        if (n >= 3) node += static_cast<std::size_t>(idx[2][k2]) * grid.stride(2);
        const double* v = values + node * ncomp;
        for (int c = 0; c < ncomp; ++c) out[c] += wt * v[c];
      }
}

DiffeoField DiffeoField::identity(const TorusGrid& grid, double t) {
  DiffeoField d;
  d.t = t;
  d.u = TensorField::vector(grid);
  return d;
}

ScalarField jacobian_determinant(const DiffeoField& phi) {
  const TorusGrid& grid = phi.grid();
  const int n = grid.dim();
  const std::vector<double> du = displacement_gradient(phi.u);
  ScalarField out(grid);
  dispatch_dim(n, [&](auto d) {
    constexpr int D = decltype(d)::value;
    for (std::size_t p = 0; p < grid.size(); ++p) {
      Mat<D> m = identity<D>();
      for (int i = 0; i < D; ++i)
        for (int a = 0; a < D; ++a) m[i * D + a] += du[(p * D + i) * D + a];
      out[p] = determinant<D>(m);
    }
  });
  return out;
}

std::vector<DiffeoField> integrate_diffeo(const FlowTrajectory& traj, const DiffeoOptions& opts) {
  if (traj.states.size() < 2) throw PreconditionError("integrate_diffeo: need at least two snapshots");
  std::vector<double> times = traj.times();
  // V is only needed from the snapshot bracketing t_min onward
  std::size_t first = 0;
  while (first + 1 < times.size() && times[first + 1] <= opts.t_min) ++first;
  std::vector<TensorField> V(times.size());
  for (std::size_t k = first; k < times.size(); ++k) V[k] = deturck_vector(traj.states[k].g, traj.bg);
  for (std::size_t k = 0; k < first; ++k) V[k] = V[first];
  return integrate_vector_flow(times, V, opts);
}

std::vector<DiffeoField> integrate_vector_flow(const std::vector<double>& times, const std::vector<TensorField>& V,
                                               const DiffeoOptions& opts) {
  if (times.size() < 2 || V.size() != times.size()) throw PreconditionError("integrate_vector_flow: bad samples");
  if (opts.substeps < 1) throw PreconditionError("integrate_diffeo: substeps must be positive");
  const TorusGrid& grid = V.back().grid();
  const int n = grid.dim();
  const double T = times.back();
  const double S = opts.S < 0.0 ? T : opts.S;
  if (S < times.front() || S > T) throw PreconditionError("integrate_diffeo: S outside the trajectory");
  if (opts.t_min > S) throw PreconditionError("integrate_diffeo: t_min after S");
  std::vector<int> snaps;
  for (int k = 0; k < static_cast<int>(times.size()); ++k)
    if (times[k] >= opts.t_min) snaps.push_back(k);
  const int first_needed = 0;
  auto field_at = [&](double tau) {
    // linear blend between bracketing snapshots
    int k = first_needed;
    while (k + 1 < static_cast<int>(times.size()) - 1 && times[k + 1] <= tau) ++k;
    const double ta = times[k], tb = times[k + 1];
    const double w = std::clamp((tau - ta) / (tb - ta), 0.0, 1.0);
    TensorField out = V[k];
    for (std::size_t i = 0; i < out.values().size(); ++i)
      out.values()[i] = (1.0 - w) * V[k].values()[i] + w * V[k + 1].values()[i];
    return out;
  };

  std::vector<double> y(grid.size() * n);
  for (std::size_t p = 0; p < grid.size(); ++p)
    for (int a = 0; a < n; ++a) y[p * n + a] = grid.coordinate(p, a);

  auto make_field = [&](double t, const std::vector<double>& pos) {
    DiffeoField d = DiffeoField::identity(grid, t);
    for (std::size_t p = 0; p < grid.size(); ++p)
      for (int a = 0; a < n; ++a) d.u.at(p, a) = pos[p * n + a] - grid.coordinate(p, a);
    const ScalarField det = jacobian_determinant(d);
    for (std::size_t p = 0; p < grid.size(); ++p)
      if (!(det[p] > 0.0))
        throw DiffeoError("diffeomorphism lost at t = " + std::to_string(t) + ", node " + std::to_string(p) +
                          ", det = " + std::to_string(det[p]));
    return d;
  };

  // RK4 on all nodes from ta to tb
  auto march = [&](std::vector<double>& pos, double ta, double tb) {
    const double h = (tb - ta) / opts.substeps;
    std::vector<double> k1(pos.size()), k2(pos.size()), k3(pos.size()), k4(pos.size()), tmp(pos.size());
    auto eval = [&](const TensorField& Vt, const std::vector<double>& at, std::vector<double>& out) {
      parallel_for(grid.size(), [&](std::size_t p) {
        std::array<double, kMaxDim> x{};
        for (int a = 0; a < n; ++a) x[a] = at[p * n + a];
        interpolate_periodic(grid, Vt.values().data(), n, x, out.data() + p * n);
      });
    };
    for (int s = 0; s < opts.substeps; ++s) {
      const double t0 = ta + s * h;
      const TensorField V0 = field_at(t0), Vm = field_at(t0 + 0.5 * h), V1 = field_at(t0 + h);
      eval(V0, pos, k1);
      for (std::size_t i = 0; i < pos.size(); ++i) tmp[i] = pos[i] + 0.5 * h * k1[i];
      eval(Vm, tmp, k2);
      for (std::size_t i = 0; i < pos.size(); ++i) tmp[i] = pos[i] + 0.5 * h * k2[i];
      eval(Vm, tmp, k3);
      for (std::size_t i = 0; i < pos.size(); ++i) tmp[i] = pos[i] + h * k3[i];
      eval(V1, tmp, k4);
      for (std::size_t i = 0; i < pos.size(); ++i) pos[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
  };

  std::vector<DiffeoField> result;
  // backward from S
  std::vector<double> pos = y;
  for (int i = static_cast<int>(snaps.size()) - 1; i >= 0; --i) {
    const double tk = times[snaps[i]];
    if (tk > S) continue;
    double from = result.empty() ? S : result.back().t;
    if (tk < from) march(pos, from, tk);
    result.push_back(tk == S ? DiffeoField::identity(grid, S) : make_field(tk, pos));
  }
  std::reverse(result.begin(), result.end());
  // forward from S
  pos = y;
  double from = S;
  for (int k : snaps) {
    const double tk = times[k];
    if (tk <= S) continue;
    march(pos, from, tk);
    from = tk;
    result.push_back(make_field(tk, pos));
  }
  return result;
}

MetricField pullback_metric(const MetricField& g, const DiffeoField& phi) {
  require_same_grid(g.grid(), phi.grid(), "pullback_metric");
  const TorusGrid& grid = g.grid();
  const int n = grid.dim();
  const std::vector<double> du = displacement_gradient(phi.u);
  MetricField out(grid);
  const int P = g.packed();
  dispatch_dim(n, [&](auto d) {
    constexpr int D = decltype(d)::value;
    parallel_for(grid.size(), [&](std::size_t p) {
      std::array<double, kMaxDim> x{};
      for (int a = 0; a < D; ++a) x[a] = grid.index(p, a) + phi.u.at(p, a) / grid.spacing();
      double gp[6];
      interpolate_grid_units(grid, g.values().data(), P, x, gp);
      const Mat<D> gm = unpack<D>(gp);
      Mat<D> J = identity<D>();  // J[a*D+i] = d_i Phi^a
      for (int a = 0; a < D; ++a)
        for (int i = 0; i < D; ++i) J[a * D + i] += du[(p * D + a) * D + i];
      for (int i = 0; i < D; ++i)
        for (int j = i; j < D; ++j) {
          double s = 0.0;
          for (int a = 0; a < D; ++a)
            for (int b = 0; b < D; ++b) s += J[a * D + i] * J[b * D + j] * gm[a * D + b];
          out(p, i, j) = s;
        }
    });
  });
  return out;
}

DiffeoField invert_diffeo(const DiffeoField& phi, int iterations) {
  const TorusGrid& grid = phi.grid();
  const int n = grid.dim();
  DiffeoField inv = DiffeoField::identity(grid, phi.t);
  for (std::size_t p = 0; p < grid.size(); ++p)
    for (int a = 0; a < n; ++a) inv.u.at(p, a) = -phi.u.at(p, a);
  for (int it = 0; it < iterations; ++it) {
    TensorField next = inv.u;
    parallel_for(grid.size(), [&](std::size_t p) {
      std::array<double, kMaxDim> x{};
      for (int a = 0; a < n; ++a) x[a] = grid.index(p, a) + inv.u.at(p, a) / grid.spacing();
      double u[kMaxDim];
      interpolate_grid_units(grid, phi.u.values().data(), n, x, u);
      for (int a = 0; a < n; ++a) next.at(p, a) = -u[a];
    });
    inv.u = std::move(next);
  }
  return inv;
}

FlowTrajectory related_flow(const FlowTrajectory& traj, const std::vector<DiffeoField>& phis) {
  FlowTrajectory out;
  out.bg = traj.bg;
  for (const DiffeoField& phi : phis) {
    auto it = std::find_if(traj.states.begin(), traj.states.end(), [&](const FlowState& s) { return s.t == phi.t; });
    if (it == traj.states.end()) throw StructuralError("related_flow: no snapshot at diffeomorphism time");
    out.states.push_back({it->t, pullback_metric(it->g, phi), it->step_count});
  }
  return out;
}

NormReport ricci_flow_residual(const FlowTrajectory& ell) {
  if (ell.states.size() < 3) throw PreconditionError("ricci_flow_residual: need at least three snapshots");
  const TorusGrid& grid = ell.grid();
  const int n = grid.dim();
  NormReport rep;
  rep.name = "ricci_flow_residual";
  rep.metadata["grid"] = std::to_string(n) + "d N=" + std::to_string(grid.res());
  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < ell.states.size(); ++k) {
    const MetricField& a = ell.states[k - 1].g;
    const MetricField& b = ell.states[k + 1].g;
    const double dt = ell.states[k + 1].t - ell.states[k - 1].t;
    const TensorField ric = ricci(ell.states[k].g);
    ScalarField r2(grid);
    for (std::size_t p = 0; p < grid.size(); ++p) {
      double s = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double v = (b(p, i, j) - a(p, i, j)) / dt + 2.0 * ric.at(p, i * n + j);
          s += v * v;
        }
      r2[p] = s;
    }
    const double l2 = std::sqrt(integrate(r2));
    rep.series["residual_l2"].push(ell.states[k].t, l2);
    rep.series["residual_max"].push(ell.states[k].t, std::sqrt(r2.max()));
    worst = std::max(worst, l2);
  }
  rep.values["max_residual_l2"] = worst;
  return rep;
}

}  // namespace rdtf
