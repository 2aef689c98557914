#pragma once

// Cutoff functions, localized energies, power-law fits and the checks of the local
// estimates for flows from rough data.

#include <array>
#include <functional>
#include <vector>

#include "rdtf/flow_engine.hpp"
#include "rdtf/grid.hpp"
#include "rdtf/norm_report.hpp"
#include "rdtf/tensor_core.hpp"

namespace rdtf {

using Point = std::array<double, kMaxDim>;

/// Flat periodic distance between two points of the torus.
double torus_distance(const TorusGrid& grid, const Point& a, const Point& b);

/// 1 on the closed flat ball B(center, radius), 0 elsewhere. radius must stay below L/2.
ScalarField ball_indicator(const TorusGrid& grid, const Point& center, double radius);

/// eta = s(d(x, center))^m, s the C^2 quintic step from 1 at d = r to 0 at d = (r + outer) / 2.
struct CutoffFunction {
  Point center{};
  double r = 0.0;
  double outer = 0.0;
  int power = 8;
  ScalarField eta;
  /// max over nodes with eta > 1e-8 of |deta|^2/eta + |deta|^4/eta^3 + |dd eta|^2/eta
  double ratio_bound = 0.0;
};

/// Requires 0 < r < outer < L/2. Derivatives of eta are exact (chain rule through the distance).
CutoffFunction build_cutoff(const Point& center, double r, double outer, const TorusGrid& grid, int power = 8);

/// Start of the resolved window, 10 dx^2.
double resolved_window_start(const TorusGrid& grid);

/// v(sigma) = sigma / (2 + sigma) and p(sigma) = (2 + sigma) / sigma.
double v_exponent(double sigma);
double p_exponent(double sigma);

/// Least-squares fit of log v = log C + q log t over points with t in [t_lo, t_hi] and v > 0.
/// Throws PreconditionError with fewer than two usable points.
PowerFit fit_power_law(const Series& s, double t_lo = 0.0, double t_hi = 1e300);

/// Linear interpolation inside the series, clamped at the ends.
double series_at(const Series& s, double t);

/// int weight |g_t - g_0|_h^2 dh
double local_l2_distance(const MetricField& g_t, const MetricField& g_0, const BackgroundMetric& bg,
                         const ScalarField& weight);
/// int weight |g_t - g_0|_h^p dh
double local_lp_distance(const MetricField& g_t, const MetricField& g_0, const BackgroundMetric& bg,
                         const ScalarField& weight, double p);
/// int weight |hnabla g|^{2 + 2 sigma} dh; sigma = 0 is the Dirichlet energy. sigma in [0, 1/4].
double sobolev_energy(const MetricField& g, const BackgroundMetric& bg, const ScalarField& weight, double sigma);
/// int weight (|hnabla g|^{4 + 2 sigma} + |hnabla g|^{2 sigma} |hnabla^2 g|^2) dh, sigma in [0, 1/4].
double sobolev_dissipation(const MetricField& g, const BackgroundMetric& bg, const ScalarField& weight,
                           double sigma);

/// int_{t_0}^t int weight |hnabla g|^2 dh ds by the trapezoid rule over the snapshots (0 at the first one).
Series dirichlet_energy_accum(const FlowTrajectory& traj, const ScalarField& weight);

/// Time integrals accumulated step by step through the evolve observer, trapezoid rule on the
/// actual step grid. For every region it tracks the Dirichlet energy and, for every sigma,
/// the dissipation integrand of sobolev_dissipation.
class EnergyAccumulator {
 public:
  EnergyAccumulator(const BackgroundMetric& bg, std::vector<ScalarField> regions, std::vector<double> sigmas);

  void observe(const FlowState& state);
  /// Observer bound to this object; the accumulator must outlive the evolve call.
  std::function<void(const FlowState&)> observer();

  /// Cumulative integrals at every observed time.
  const Series& dirichlet(std::size_t region) const { return dirichlet_.at(region); }
  const Series& dissipation(std::size_t region, std::size_t sigma) const {
    return dissipation_.at(region * sigmas_.size() + sigma);
  }

 private:
  const BackgroundMetric* bg_;
  std::vector<ScalarField> regions_;
  std::vector<double> sigmas_;
  std::vector<double> last_;     // integrands at the previous state
  double last_t_ = 0.0;
  bool started_ = false;
  std::vector<Series> dirichlet_;
  std::vector<Series> dissipation_;
};

struct VerifyOptions {
  double t_lo = -1.0;          // window start; negative means 10 dx^2
  double min_rate = 0.9;       // fitted exponent floor for the L^2 rate
  double attainment = 1e-2;    // LHS(t_lo) <= attainment * C (the fit at t = 1)
  double decay_fraction = 0.05;
};

/// LHS(t) = int_inner |g(t) - g_0|^2 + int_0^t int_inner |hnabla g|^2, fitted to C t^q on the window.
/// `accumulated` is the Dirichlet time integral over the inner region (snapshot trapezoid if null).
/// Values q, C, C_normalized = C / (1 + int_outer |hnabla g_0|^2); verdicts "rate" and "attainment".
NormReport verify_l2_rate(const FlowTrajectory& traj, const MetricField& g_0, const ScalarField& inner,
                          const ScalarField& outer, const Series* accumulated = nullptr, const VerifyOptions& opts = {});

/// LHS(t) = int_inner |hnabla g(t)|^{2+2s} + int_0^t int_inner (|hnabla g|^{4+2s} + |hnabla g|^{2s} |hnabla^2 g|^2),
/// I1 = int_outer |hnabla g_0|^{2+2s}, I2 = 1 + int_outer |hnabla g_0|^2.
/// A = LHS(t_lo) / I1 and B = max secant slope of LHS from t_lo / I2 are the smallest constants with
/// LHS(t) <= A I1 + B I2 (t - t_lo) on the window; "excess" = LHS - LHS(t_lo). "slope" and "intercept"
/// come from a least-squares line. Verdict "at_most_linear": no secant slope in the second half of the
/// window exceeds the largest one of the first half (floored at 0) by more than 5% of max LHS / span.
NormReport verify_sobolev_estimate(const FlowTrajectory& traj, const MetricField& g_0, double sigma,
                                   const ScalarField& inner, const ScalarField& outer,
                                   const Series* accumulated = nullptr, const VerifyOptions& opts = {});

/// Series "grad_diff" = int_region |hnabla g(t) - hnabla g_0|^{2 + sigma} and "lp_<p>" = int_region |g(t) - g_0|^p,
/// plus "dirichlet_excess" = int_inner |hnabla g(t)|^2 - int_outer |hnabla g_0|^2 with its fitted exponent
/// against v(sigma). Verdicts: "grad_diff_to_zero" (nondecreasing in t on the window and
/// value(t_lo) <= decay_fraction * value(T)), and "lp_<p>_to_zero" (nondecreasing in t).
NormReport verify_w12sigma_convergence(const FlowTrajectory& traj, const MetricField& g_0, double sigma,
                                       const ScalarField& inner, const ScalarField& outer,
                                       const std::vector<double>& p_list = {2.0, 4.0}, const VerifyOptions& opts = {});

/// Both sides of int |grad f|_g^4 / f^2 dg <= c int |Hess_g f|_g^2 dg with spectral derivatives, and
/// the residual of int |grad f^(1/2)|^4 = 1/4 int Lap f |grad f^(1/2)|^2 + 1/2 int Hess f(grad f^(1/2), grad f^(1/2)).
/// Values "lhs", "rhs", "ratio", "identity_residual" (relative). Throws if f <= 0 somewhere.
NormReport interpolation_inequality_check(const ScalarField& f, const MetricField& g);

}  // namespace rdtf
