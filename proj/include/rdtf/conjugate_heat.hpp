#pragma once

// Conjugate heat equation solved backward along a Ricci flow trajectory, with the
// scalar-curvature mass series and the sup/p-norm bounds on its solutions.

#include <vector>

#include "rdtf/errors.hpp"
#include "rdtf/flow_engine.hpp"
#include "rdtf/grid.hpp"
#include "rdtf/norm_report.hpp"

namespace rdtf {

/// phi dropped below -tol * max phi_Y somewhere.
class NegativityError : public Error {
 public:
  NegativityError(double t, double value);
  double time() const { return t_; }
  double value() const { return value_; }

 private:
  double t_;
  double value_;
};

/// Delta_ell psi = (1 / sqrt det ell) d_i (sqrt det ell ell^ij d_j psi), both derivatives by the
/// antisymmetric first-difference stencil, so the discrete operator is symmetric in the
/// sqrt(det ell)-weighted inner product and has zero weighted mean.
ScalarField divergence_laplacian(const ScalarField& psi, const MetricField& ell);

/// Delta_ell psi - R_ell psi.
ScalarField conjugate_rhs(const ScalarField& psi, const MetricField& ell);

struct ConjugateOptions {
  double c_cfl = 0.2;           // dt = c_cfl dx^2 / (2 n max lambda(ell^-1)) over the window
  double dt = 0.0;              // 0 picks the limit; larger than the limit throws CflError
  double negativity_tol = 1e-10;
};

struct ConjugateRun {
  double Y = 0.0;
  double t_min = 0.0;
  double b = 0.0;
  ScalarField phi_Y;
  std::vector<double> times;             // snapshot times in [t_min, Y], ascending
  std::vector<ScalarField> phi_series;   // phi at those times; the last one is phi_Y
  FlowTrajectory ell_traj;
  double dt = 0.0;
  long steps = 0;
  long clamped = 0;                      // nodes clamped from tiny negative values to 0
};

/// Integrates d_tau psi = Delta psi - R psi with psi = phi(Y - tau) from tau = 0 to Y - t_min by
/// Heun's method. The metric between snapshots is interpolated linearly in time.
ConjugateRun solve_conjugate(const FlowTrajectory& ell_traj, const ScalarField& phi_Y, double Y, double t_min,
                             double b = 0.0, const ConjugateOptions& opts = {});

/// Series "M" = int (R + b) phi dell, "ric_term" = int 2 phi |Ric|^2 dell and "mass" = int phi dell.
/// Values "max_violation" = max over t < t' of (M(t) - M(t'))^+ and "tolerance" = 1e-4 (1 + |M(Y)|);
/// verdict "monotone".
NormReport scalar_mass_series(const ConjugateRun& run);

/// Largest eps with min R(t) >= -eps / t over snapshots with t > 0 (0 if R >= 0 throughout).
double measured_eps(const FlowTrajectory& ell_traj, double t_min = 0.0, double t_max = 1e300);

/// Sup bound ratio max_t sup phi(t) t^eps / (Y^eps sup phi_Y), series "phi_p<p>" = int phi^p dell for each p,
/// and "L_alpha" = int int |R^-|^alpha dell dt, "V" = max vol(ell(t)).
/// Verdict "sup_bound" (ratio <= 1 + 1e-2) only when min R t >= -eps holds; otherwise metadata
/// "sup_bound" = "inapplicable".
NormReport check_conjugate_bounds(const ConjugateRun& run, double eps, const std::vector<double>& p_list = {2.0},
                                  double alpha = 2.0);

}  // namespace rdtf
