#pragma once

// The related Ricci flow: DeTurck field, the diffeomorphisms it generates, and pullbacks.

#include <array>
#include <vector>

#include "rdtf/flow_engine.hpp"
#include "rdtf/grid.hpp"
#include "rdtf/norm_report.hpp"
#include "rdtf/tensor_core.hpp"

namespace rdtf {

/// V^a = -g^{bc} (Gamma(g)^a_bc - Gamma(h)^a_bc), formed from hnabla g.
TensorField deturck_vector(const MetricField& g, const BackgroundMetric& bg);

/// Periodic 4-point Lagrange interpolation of ncomp interleaved components at an arbitrary point.
void interpolate_periodic(const TorusGrid& grid, const double* values, int ncomp, const std::array<double, kMaxDim>& x,
                          double* out);
/// Same with the point given in grid units (x / dx), so node positions are exact.
void interpolate_grid_units(const TorusGrid& grid, const double* values, int ncomp, const std::array<double, kMaxDim>& pos,
                            double* out);

/// Phi(x) = x + u(x) mod L.
struct DiffeoField {
  double t = 0.0;
  TensorField u;   // displacement, (Up)

  static DiffeoField identity(const TorusGrid& grid, double t = 0.0);
  const TorusGrid& grid() const { return u.grid(); }
};

/// det(I + Du) per node, Du by fourth-order differences.
ScalarField jacobian_determinant(const DiffeoField& phi);

struct DiffeoOptions {
  double S = -1.0;      // time where Phi = Id; negative means the last snapshot
  double t_min = 0.0;   // earliest time to integrate to
  int substeps = 4;     // RK4 steps per snapshot interval
};

/// Solves d/dt Phi(x,t) = V(Phi(x,t), t), Phi(x,S) = x, from S to every snapshot time in
/// [t_min, T]. V is cubic in space, linear in time between snapshots.
/// Returns one DiffeoField per snapshot in that window, ordered by time.
std::vector<DiffeoField> integrate_diffeo(const FlowTrajectory& traj, const DiffeoOptions& opts = {});

/// Same ODE for a given time-sampled vector field; times strictly increasing, fields[k] at times[k].
std::vector<DiffeoField> integrate_vector_flow(const std::vector<double>& times, const std::vector<TensorField>& fields,
                                               const DiffeoOptions& opts);

/// ell_ij(x) = d_i Phi^a d_j Phi^b g_ab(Phi(x)).
MetricField pullback_metric(const MetricField& g, const DiffeoField& phi);

/// psi with Phi(psi(y)) = y by fixed-point iteration on the grid.
DiffeoField invert_diffeo(const DiffeoField& phi, int iterations = 60);

/// Pullback of every snapshot in the window by the matching diffeomorphism.
FlowTrajectory related_flow(const FlowTrajectory& traj, const std::vector<DiffeoField>& phis);

/// d_t ell + 2 Ric(ell) at interior snapshots (central differences in time).
/// Series "residual_max" and "residual_l2"; values "max_residual_l2".
NormReport ricci_flow_residual(const FlowTrajectory& ell_traj);

}  // namespace rdtf
