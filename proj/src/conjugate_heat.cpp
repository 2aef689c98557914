#include "rdtf/conjugate_heat.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rdtf/curvature.hpp"
#include "rdtf/errors.hpp"
#include "rdtf/parallel.hpp"
#include "rdtf/small_matrix.hpp"
#include "rdtf/stencil.hpp"

namespace rdtf {

NegativityError::NegativityError(double t, double value)
    : Error("conjugate heat solution went negative (" + std::to_string(value) + ") at t = " + std::to_string(t)),
      t_(t),
      value_(value) {}

namespace {

/// Coefficients of Delta_ell - R_ell frozen at one metric.
struct HeatOperator {
  MetricField flux;   // sqrt(det ell) ell^ij
  ScalarField inv_vol;
  ScalarField vol;
  ScalarField R;
};

HeatOperator build_operator(const MetricField& ell, bool with_curvature) {
  require_spd(ell);
  const TorusGrid& grid = ell.grid();
  HeatOperator op;
  op.flux = MetricField(grid);
  op.vol = ScalarField(grid);
  op.inv_vol = ScalarField(grid);
  dispatch_dim(ell.dim(), [&](auto d) {
    constexpr int D = decltype(d)::value;
    parallel_for(grid.size(), [&](std::size_t p) {
      const Mat<D> m = unpack<D>(ell.node(p));
      const double v = std::sqrt(determinant<D>(m));
      Mat<D> a = inverse<D>(m);
      for (double& x : a) x *= v;
      pack<D>(a, op.flux.node(p));
      op.vol[p] = v;
      op.inv_vol[p] = 1.0 / v;
    });
  });
  op.R = with_curvature ? scalar_curvature(ell) : ScalarField(grid);
  return op;
}

ScalarField apply_laplacian(const ScalarField& psi, const HeatOperator& op) {
  const TorusGrid& grid = psi.grid();
  const int n = grid.dim();
  std::vector<double> grad(grid.size() * n), flux(grid.size() * n);
  for (int a = 0; a < n; ++a) first_derivative(grid, a, psi.values().data(), 1, 1, grad.data() + a, n);
  parallel_for(grid.size(), [&](std::size_t p) {
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += op.flux(p, i, j) * grad[p * n + j];
      flux[p * n + i] = s;
    }
  });
  ScalarField out(grid);
  std::vector<double> div(grid.size());
  for (int a = 0; a < n; ++a) {
    first_derivative(grid, a, flux.data() + a, n, 1, div.data(), 1);
    for (std::size_t p = 0; p < grid.size(); ++p) out[p] += div[p];
  }
  for (std::size_t p = 0; p < grid.size(); ++p) out[p] *= op.inv_vol[p];
  return out;
}

ScalarField apply_conjugate(const ScalarField& psi, const HeatOperator& op) {
  ScalarField out = apply_laplacian(psi, op);
  for (std::size_t p = 0; p < out.size(); ++p) out[p] -= op.R[p] * psi[p];
  return out;
}

double max_inverse_coordinate_eigenvalue(const MetricField& ell) {
  return dispatch_dim(ell.dim(), [&](auto d) {
    constexpr int D = decltype(d)::value;
    double lam = 0.0;
    for (std::size_t p = 0; p < ell.grid().size(); ++p) {
      const double e = symmetric_eigenvalues<D>(unpack<D>(ell.node(p)))[0];
      if (!(e > 0.0)) throw SpdError(p, e);
      lam = std::max(lam, 1.0 / e);
    }
    return lam;
  });
}

std::string grid_label(const TorusGrid& grid) {
  std::ostringstream s;
  s << "n=" << grid.dim() << " N=" << grid.res() << " L=" << grid.period();
  return s.str();
}

}  // namespace

ScalarField divergence_laplacian(const ScalarField& psi, const MetricField& ell) {
  require_same_grid(psi.grid(), ell.grid(), "divergence_laplacian");
  return apply_laplacian(psi, build_operator(ell, false));
}

ScalarField conjugate_rhs(const ScalarField& psi, const MetricField& ell) {
  require_same_grid(psi.grid(), ell.grid(), "conjugate_rhs");
  return apply_conjugate(psi, build_operator(ell, true));
}

ConjugateRun solve_conjugate(const FlowTrajectory& ell_traj, const ScalarField& phi_Y, double Y, double t_min,
                             double b, const ConjugateOptions& opts) {
  if (ell_traj.states.empty()) throw PreconditionError("solve_conjugate: empty trajectory");
  require_same_grid(phi_Y.grid(), ell_traj.states.front().g.grid(), "solve_conjugate");
  if (phi_Y.min() < 0.0) throw PreconditionError("solve_conjugate: phi_Y must be non-negative");
  if (!(t_min < Y)) throw PreconditionError("solve_conjugate: need t_min < Y");
  const double t0 = ell_traj.states.front().t, t1 = ell_traj.states.back().t;
  const double slack = 1e-12 * std::max(1.0, std::abs(t1));
  if (t_min < t0 - slack || Y > t1 + slack) throw PreconditionError("solve_conjugate: [t_min, Y] outside the trajectory");

  ConjugateRun run;
  run.Y = Y;
  run.t_min = t_min;
  run.b = b;
  run.phi_Y = phi_Y;
  run.ell_traj = ell_traj;

  std::vector<double> marks{t_min, Y};
  for (const auto& s : ell_traj.states)
    if (s.t > t_min && s.t < Y) marks.push_back(s.t);
  std::sort(marks.begin(), marks.end());
  marks.erase(std::unique(marks.begin(), marks.end()), marks.end());

  // the inverse is operator convex, so the endpoint and snapshot metrics bound every interpolated one
  double lam = std::max(max_inverse_coordinate_eigenvalue(ell_traj.metric_at(t_min)),
                        max_inverse_coordinate_eigenvalue(ell_traj.metric_at(Y)));
  for (const auto& s : ell_traj.states)
    if (s.t > t_min && s.t < Y) lam = std::max(lam, max_inverse_coordinate_eigenvalue(s.g));
  const TorusGrid& grid = phi_Y.grid();
  const double dx = grid.spacing();
  const double limit = opts.c_cfl * dx * dx / (2.0 * grid.dim() * lam);
  double dt = limit;
  if (opts.dt > 0.0) {
    if (opts.dt > limit) throw CflError(opts.dt, limit);
    dt = opts.dt;
  }
  run.dt = dt;

  const double floor_tol = opts.negativity_tol * phi_Y.max();
  std::vector<ScalarField> stored;
  ScalarField psi = phi_Y;
  double t = Y;
  HeatOperator op = build_operator(ell_traj.metric_at(t), true);
  stored.push_back(psi);
  for (auto it = marks.rbegin() + 1; it != marks.rend(); ++it) {
    const double mark = *it;
    while (t > mark) {
      double h = dt;
      bool hit = false;
      if (t - h <= mark || (t - h) - mark < 1e-9 * dt) {
        h = t - mark;
        hit = true;
      }
      HeatOperator next = build_operator(ell_traj.metric_at(t - h), true);
      const ScalarField k1 = apply_conjugate(psi, op);
      ScalarField pred = psi;
      for (std::size_t p = 0; p < pred.size(); ++p) pred[p] += h * k1[p];
      const ScalarField k2 = apply_conjugate(pred, next);
      for (std::size_t p = 0; p < psi.size(); ++p) psi[p] += 0.5 * h * (k1[p] + k2[p]);
      t = hit ? mark : t - h;
      ++run.steps;
      for (double& v : psi.values()) {
        if (v >= 0.0) continue;
        if (v < -floor_tol) throw NegativityError(t, v);
        v = 0.0;
        ++run.clamped;
      }
      op = std::move(next);
    }
    stored.push_back(psi);
  }
  std::reverse(stored.begin(), stored.end());
  run.times = marks;
  run.phi_series = std::move(stored);
  return run;
}

NormReport scalar_mass_series(const ConjugateRun& run) {
  NormReport rep;
  rep.name = "scalar_mass";
  const TorusGrid& grid = run.phi_Y.grid();
  rep.metadata["grid"] = grid_label(grid);
  rep.metadata["dt"] = std::to_string(run.dt);
  rep.metadata["steps"] = std::to_string(run.steps);
  rep.values["b"] = run.b;
  rep.values["clamped_nodes"] = static_cast<double>(run.clamped);
  Series& M = rep.series["M"];
  Series& ric = rep.series["ric_term"];
  Series& mass = rep.series["mass"];
  for (std::size_t k = 0; k < run.times.size(); ++k) {
    const MetricField ell = run.ell_traj.metric_at(run.times[k]);
    ScalarField R, ric_sq;
    scalar_and_ricci_sq(ell, R, ric_sq);
    const ScalarField vol = sqrt_det(ell);
    const ScalarField& phi = run.phi_series[k];
    ScalarField a(grid), c(grid);
    for (std::size_t p = 0; p < grid.size(); ++p) {
      a[p] = (R[p] + run.b) * phi[p];
      c[p] = 2.0 * phi[p] * ric_sq[p];
    }
    M.push(run.times[k], integrate(a, vol));
    ric.push(run.times[k], integrate(c, vol));
    mass.push(run.times[k], integrate(phi, vol));
  }
  // largest drop: M at an earlier time above M at any later one
  double violation = 0.0;
  double later_min = 1e300;
  for (std::size_t k = M.value.size(); k-- > 0;) {
    violation = std::max(violation, M.value[k] - later_min);
    later_min = std::min(later_min, M.value[k]);
  }
  rep.values["max_violation"] = violation;
  rep.values["tolerance"] = 1e-4 * (1.0 + std::abs(M.value.back()));
  rep.values["min_ric_term"] = *std::min_element(ric.value.begin(), ric.value.end());
  rep.verdicts["monotone"] = violation <= rep.values["tolerance"];
  return rep;
}

double measured_eps(const FlowTrajectory& ell_traj, double t_min, double t_max) {
  double eps = 0.0;
  for (const auto& s : ell_traj.states) {
    if (s.t <= 0.0 || s.t < t_min || s.t > t_max) continue;
    eps = std::max(eps, -scalar_curvature(s.g).min() * s.t);
  }
  return eps;
}

NormReport check_conjugate_bounds(const ConjugateRun& run, double eps, const std::vector<double>& p_list,
                                  double alpha) {
  if (!(eps >= 0.0)) throw PreconditionError("check_conjugate_bounds: eps must be non-negative");
  NormReport rep;
  rep.name = "conjugate_bounds";
  const TorusGrid& grid = run.phi_Y.grid();
  rep.metadata["grid"] = grid_label(grid);
  rep.metadata["dt"] = std::to_string(run.dt);
  rep.values["eps"] = eps;
  const double sup_Y = run.phi_Y.max();
  bool hypothesis = true;
  double ratio = 0.0;
  double vmax = 0.0;
  Series& neg = rep.series["neg_R_alpha"];
  for (std::size_t k = 0; k < run.times.size(); ++k) {
    const double t = run.times[k];
    const MetricField ell = run.ell_traj.metric_at(t);
    const ScalarField R = scalar_curvature(ell);
    const ScalarField vol = sqrt_det(ell);
    const ScalarField& phi = run.phi_series[k];
    if (t > 0.0) {
      hypothesis = hypothesis && R.min() * t >= -eps;
      ratio = std::max(ratio, phi.max() * std::pow(t / run.Y, eps) / sup_Y);
    }
    ScalarField one(grid, 1.0);
    vmax = std::max(vmax, integrate(one, vol));
    for (double p : p_list) {
      ScalarField f(grid);
      for (std::size_t q = 0; q < grid.size(); ++q) f[q] = std::pow(phi[q], p);
      std::ostringstream key;
      key << "phi_p" << p;
      rep.series[key.str()].push(t, integrate(f, vol));
    }
    ScalarField rn(grid);
    for (std::size_t q = 0; q < grid.size(); ++q) rn[q] = std::pow(std::max(-R[q], 0.0), alpha);
    neg.push(t, integrate(rn, vol));
  }
  double L_alpha = 0.0;
  for (std::size_t k = 1; k < neg.t.size(); ++k)
    L_alpha += 0.5 * (neg.t[k] - neg.t[k - 1]) * (neg.value[k] + neg.value[k - 1]);
  rep.values["sup_ratio"] = ratio;
  rep.values["L_alpha"] = L_alpha;
  rep.values["alpha"] = alpha;
  rep.values["V"] = vmax;
  if (hypothesis) {
    rep.metadata["sup_bound"] = "applicable";
    rep.verdicts["sup_bound"] = ratio <= 1.0 + 1e-2;
  } else {
    rep.metadata["sup_bound"] = "inapplicable";
  }
  return rep;
}

}  // namespace rdtf
