#include "rdtf/flow_engine.hpp"

#include <algorithm>
#include <cmath>

#include "rdtf/errors.hpp"
#include "rdtf/parallel.hpp"
#include "rdtf/small_matrix.hpp"

namespace rdtf {

namespace {

template <int D>
void rhs_kernel(const MetricField& g, const BackgroundMetric& bg, const MetricJet& jet, MetricField& out) {
  const TorusGrid& grid = g.grid();
  parallel_for(grid.size(), [&](std::size_t p) {
    const Mat<D> gm = unpack<D>(g.node(p));
    const Mat<D> gi = inverse<D>(gm);
    const double* d1 = jet.grad_at(p);
    const double* d2 = jet.hess_at(p);
    auto G1 = [&](int a, int i, int j) { return d1[(a * D + i) * D + j]; };

    // curvature part: C_ij = g^{kl} g_ip h^{pq} Rm_jkql
    double curv[D * D] = {};
    if (!bg.flat) {
      const Mat<D> hi = unpack<D>(bg.h_inv.node(p));
      const double* rm = bg.riemann.node(p);
      Mat<D> gh{};  // g_ip h^{pq}
      for (int i = 0; i < D; ++i)
        for (int q = 0; q < D; ++q) {
          double s = 0.0;
          for (int pp = 0; pp < D; ++pp) s += gm[i * D + pp] * hi[pp * D + q];
          gh[i * D + q] = s;
        }
      for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j) {
          double s = 0.0;
          for (int k = 0; k < D; ++k)
            for (int l = 0; l < D; ++l) {
              const double gkl = gi[k * D + l];
              for (int q = 0; q < D; ++q) s += gkl * gh[i * D + q] * rm[((j * D + k) * D + q) * D + l];
            }
          curv[i * D + j] = s;
        }
    }

    // raised copies of the first derivatives X[a][i][j] = hnabla_a g_ij:
    //   W[b][i][p] = X[b][i][q] g^{qp},  Y[a][i][p] = g^{ab} W[b][i][p],  Z[j] = g^-1 X[j] g^-1
    double W[D * D * D], Y[D * D * D], Z[D * D * D];
    for (int b = 0; b < D; ++b)
      for (int i = 0; i < D; ++i)
        for (int pp = 0; pp < D; ++pp) {
          double s = 0.0;
          for (int q = 0; q < D; ++q) s += G1(b, i, q) * gi[q * D + pp];
          W[(b * D + i) * D + pp] = s;
        }
    for (int a = 0; a < D; ++a)
      for (int i = 0; i < D; ++i)
        for (int pp = 0; pp < D; ++pp) {
          double s = 0.0;
          for (int b = 0; b < D; ++b) s += gi[a * D + b] * W[(b * D + i) * D + pp];
          Y[(a * D + i) * D + pp] = s;
        }
    // W[j][q][p] is X[j] g^-1; one more contraction on the left gives Z
    for (int j = 0; j < D; ++j)
      for (int pp = 0; pp < D; ++pp)
        for (int a = 0; a < D; ++a) {
          double s = 0.0;
          for (int q = 0; q < D; ++q) s += gi[pp * D + q] * W[(j * D + q) * D + a];
          Z[(j * D + pp) * D + a] = s;
        }

    for (int i = 0; i < D; ++i)
      for (int j = i; j < D; ++j) {
        double lap = 0.0;
        for (int a = 0; a < D; ++a)
          for (int b = 0; b < D; ++b) lap += gi[a * D + b] * d2[((a * D + b) * D + i) * D + j];
        double quad = 0.0;
        for (int a = 0; a < D; ++a)
          for (int pp = 0; pp < D; ++pp) {
            const double xi = G1(i, pp, a), xj = G1(j, pp, a), xaj = G1(a, j, pp);
            quad += xi * Z[(j * D + pp) * D + a] + 2.0 * xaj * Y[(pp * D + i) * D + a] -
                    2.0 * xaj * Y[(a * D + i) * D + pp] - 2.0 * xj * Y[(a * D + i) * D + pp] -
                    2.0 * xi * Y[(a * D + j) * D + pp];
          }
        out.node(p)[packed_index(D, i, j)] = lap - curv[i * D + j] - curv[j * D + i] + 0.5 * quad;
      }
  });
}

/// g + c * k, componentwise on packed storage.
MetricField axpy(const MetricField& g, double c, const MetricField& k) {
  MetricField out = g;
  auto& v = out.values();
  const auto& kv = k.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += c * kv[i];
  return out;
}

FlowState advance(const FlowState& s, double dt, const BackgroundMetric& bg, Scheme scheme) {
  FlowState next;
  next.t = s.t + dt;
  next.step_count = s.step_count + 1;
  switch (scheme) {
    case Scheme::Euler:
      next.g = axpy(s.g, dt, rdtf_rhs(s.g, bg));
      break;
    case Scheme::RK2: {
      const MetricField k1 = rdtf_rhs(s.g, bg);
      next.g = axpy(s.g, dt, rdtf_rhs(axpy(s.g, 0.5 * dt, k1), bg));
      break;
    }
    case Scheme::RK4: {
      const MetricField k1 = rdtf_rhs(s.g, bg);
      const MetricField k2 = rdtf_rhs(axpy(s.g, 0.5 * dt, k1), bg);
      const MetricField k3 = rdtf_rhs(axpy(s.g, 0.5 * dt, k2), bg);
      const MetricField k4 = rdtf_rhs(axpy(s.g, dt, k3), bg);
      next.g = s.g;
      auto& v = next.g.values();
      for (std::size_t i = 0; i < v.size(); ++i)
        v[i] += dt / 6.0 * (k1.values()[i] + 2.0 * k2.values()[i] + 2.0 * k3.values()[i] + k4.values()[i]);
      break;
    }
  }
  require_spd(next.g);
  return next;
}

}  // namespace

Scheme parse_scheme(const std::string& name) {
  if (name == "euler") return Scheme::Euler;
  if (name == "rk2") return Scheme::RK2;
  if (name == "rk4") return Scheme::RK4;
  throw PreconditionError("unknown time scheme '" + name + "' (expected euler, rk2 or rk4)");
}

std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::Euler:
      return "euler";
    case Scheme::RK2:
      return "rk2";
    case Scheme::RK4:
      return "rk4";
  }
  return "?";
}

std::vector<double> FlowTrajectory::times() const {
  std::vector<double> t;
  t.reserve(states.size());
  for (const auto& s : states) t.push_back(s.t);
  return t;
}

MetricField FlowTrajectory::metric_at(double t) const {
  if (states.empty()) throw PreconditionError("metric_at: empty trajectory");
  if (t <= states.front().t) return states.front().g;
  if (t >= states.back().t) return states.back().g;
  auto it = std::upper_bound(states.begin(), states.end(), t, [](double v, const FlowState& s) { return v < s.t; });
  const FlowState& b = *it;
  const FlowState& a = *(it - 1);
  const double w = (t - a.t) / (b.t - a.t);
  MetricField out = a.g;
  auto& v = out.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (1.0 - w) * a.g.values()[i] + w * b.g.values()[i];
  return out;
}

MetricField rdtf_rhs(const MetricField& g, const BackgroundMetric& bg) {
  require_same_grid(g.grid(), bg.grid(), "rdtf_rhs");
  require_spd(g);
  const MetricJet jet = metric_jet(g, bg, true);
  MetricField out(g.grid());
  dispatch_dim(g.dim(), [&](auto d) { rhs_kernel<decltype(d)::value>(g, bg, jet, out); });
  return out;
}

double cfl_limit(const MetricField& g, const BackgroundMetric& bg, double c_cfl) {
  const double dx = g.grid().spacing();
  return c_cfl * dx * dx / (2.0 * g.dim() * max_inverse_eigenvalue(g, bg));
}

FlowState step(const FlowState& state, double dt, const BackgroundMetric& bg, Scheme scheme, double c_cfl) {
  if (!(dt > 0.0)) throw PreconditionError("step: dt must be positive");
  const double limit = cfl_limit(state.g, bg, c_cfl);
  if (dt > limit) throw CflError(dt, limit);
  return advance(state, dt, bg, scheme);
}

SnapshotStats snapshot_stats(const MetricField& g, const BackgroundMetric& bg) {
  const MetricJet jet = metric_jet(g, bg, true);
  SnapshotStats s;
  s.max_grad_sq = grad_norm_sq(jet, bg).max();
  s.max_hess_sq = hess_norm_sq(jet, bg).max();
  s.pinning = pinning_deviation(g, bg);
  return s;
}

FlowTrajectory evolve(const MetricField& g0, double t_final, const BackgroundMetric& bg,
                      const std::vector<double>& snapshot_times, const EvolveOptions& opts) {
  require_same_grid(g0.grid(), bg.grid(), "evolve");
  if (!(t_final > 0.0)) throw PreconditionError("evolve: t_final must be positive");
  std::vector<double> marks;
  for (double t : snapshot_times)
    if (t > 0.0 && t < t_final) marks.push_back(t);
  marks.push_back(t_final);
  std::sort(marks.begin(), marks.end());
  marks.erase(std::unique(marks.begin(), marks.end()), marks.end());

  FlowTrajectory traj;
  traj.bg = bg;
  FlowState s{0.0, g0, 0};
  auto record = [&](const FlowState& st) {
    traj.states.push_back(st);
    if (opts.record_stats) traj.stats.push_back(snapshot_stats(st.g, bg));
  };
  const bool keep_initial =
      std::any_of(snapshot_times.begin(), snapshot_times.end(), [](double t) { return t <= 0.0; }) ||
      snapshot_times.empty();
  if (keep_initial) record(s);
  if (opts.observer) opts.observer(s);

  for (double mark : marks) {
    while (s.t < mark) {
      double dt;
      try {
        dt = cfl_limit(s.g, bg, opts.c_cfl);
      } catch (const SpdError& e) {
        traj.truncated = true;
        traj.diagnostic = e.what();
        return traj;
      }
      bool hit = false;
      if (s.t + dt >= mark || mark - (s.t + dt) < 1e-9 * dt) {
        dt = mark - s.t;
        hit = true;
      }
      try {
        s = advance(s, dt, bg, opts.scheme);
      } catch (const SpdError& e) {
        traj.truncated = true;
        traj.diagnostic = std::string("blow-up: ") + e.what();
        return traj;
      }
      if (hit) s.t = mark;
      traj.dt_schedule.push_back(dt);
      if (opts.observer) opts.observer(s);
      const double dev = difference_norm(s.g, bg.h, bg).max();
      if (!(dev <= 3.0 * opts.eps0)) {
        traj.truncated = true;
        traj.diagnostic = "blow-up: max |g - h| = " + std::to_string(dev) + " exceeds 3 eps0 at t = " +
                          std::to_string(s.t);
        record(s);
        return traj;
      }
    }
    record(s);
  }
  return traj;
}

OmegaDiagnostic omega_monitor(const FlowState& state, const FlowState& next, const BackgroundMetric& bg,
                              double L_const) {
  require_same_grid(state.g.grid(), next.g.grid(), "omega_monitor");
  const double dt = next.t - state.t;
  if (!(dt > 0.0)) throw PreconditionError("omega_monitor: states must be consecutive in time");
  const TorusGrid& grid = bg.grid();
  const int n = grid.dim();
  auto omega_of = [&](const MetricField& g, ScalarField* grad_sq, ScalarField* hess_sq) {
    const MetricJet jet = metric_jet(g, bg, hess_sq != nullptr);
    const ScalarField gs = grad_norm_sq(jet, bg);
    const ScalarField dn = difference_norm(g, bg.h, bg);
    ScalarField w(grid);
    for (std::size_t p = 0; p < grid.size(); ++p) w[p] = gs[p] * (1.0 + L_const * dn[p] * dn[p]);
    if (grad_sq) *grad_sq = gs;
    if (hess_sq) *hess_sq = hess_norm_sq(jet, bg);
    return w;
  };
  OmegaDiagnostic out;
  out.L_const = L_const;
  ScalarField gs, hs;
  out.omega = omega_of(state.g, &gs, &hs);
  const ScalarField w1 = omega_of(next.g, nullptr, nullptr);

  TensorField wt(grid, {});
  wt.values() = out.omega.values();
  const TensorField hw = hcov_hessian(wt, bg);
  const MetricField gi = inverse_metric_field(state.g);

  out.inequality_residual = ScalarField(grid);
  out.quartic_term = ScalarField(grid);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    double ell = 0.0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) ell += gi(p, a, b) * hw.at(p, a * n + b);
    const double quartic = 0.75 * L_const * gs[p] * gs[p];
    out.quartic_term[p] = quartic;
    out.inequality_residual[p] = (w1[p] - out.omega[p]) / dt - ell + 8.0 / 7.0 * hs[p] + quartic;
  }
  out.max_residual = out.inequality_residual.max();
  return out;
}

}  // namespace rdtf
