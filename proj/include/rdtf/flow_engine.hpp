#pragma once

// Ricci-DeTurck flow relative to a fixed background h: right-hand side, explicit
// time stepping, trajectories and the omega monitor.

#include <functional>
#include <string>
#include <vector>

#include "rdtf/grid.hpp"
#include "rdtf/tensor_core.hpp"

namespace rdtf {

enum class Scheme { Euler, RK2, RK4 };

Scheme parse_scheme(const std::string& name);
std::string scheme_name(Scheme s);

struct FlowState {
  double t = 0.0;
  MetricField g;
  long step_count = 0;
};

/// Per-snapshot derivative maxima, recorded for the t^j |hnabla^j g|^2 smoothing bounds.
struct SnapshotStats {
  double max_grad_sq = 0.0;   // max-node |hnabla g|^2
  double max_hess_sq = 0.0;   // max-node |hnabla^2 g|^2
  double pinning = 0.0;       // max-node |lambda(h^-1 g) - 1|
};

struct FlowTrajectory {
  std::vector<FlowState> states;   // snapshots, strictly increasing in t
  std::vector<SnapshotStats> stats;
  std::vector<double> dt_schedule; // every step actually taken
  BackgroundMetric bg;
  bool truncated = false;
  std::string diagnostic;          // reason for truncation, empty otherwise

  const TorusGrid& grid() const { return bg.grid(); }
  std::vector<double> times() const;
  /// Linear interpolation in time between neighbouring snapshots; clamps outside the range.
  MetricField metric_at(double t) const;
};

/// Full right-hand side of the flow, all terms written out:
///   g^{ab} hnabla_a hnabla_b g_ij
///   - g^{kl} g_ip h^{pq} Rm_jkql(h) - g^{kl} g_jp h^{pq} Rm_ikql(h)
///   + 1/2 g^{ab} g^{pq} (hnabla_i g_pa hnabla_j g_qb + 2 hnabla_a g_jp hnabla_q g_ib
///        - 2 hnabla_a g_jp hnabla_b g_iq - 2 hnabla_j g_pa hnabla_b g_iq - 2 hnabla_i g_pa hnabla_b g_jq)
MetricField rdtf_rhs(const MetricField& g, const BackgroundMetric& bg);

/// Explicit stability limit c_cfl * dx^2 / (2 n max lambda(g^-1 h)).
double cfl_limit(const MetricField& g, const BackgroundMetric& bg, double c_cfl = 0.2);

/// One explicit step. Throws CflError if dt exceeds the limit, SpdError if the result is not SPD.
FlowState step(const FlowState& state, double dt, const BackgroundMetric& bg, Scheme scheme,
               double c_cfl = 0.2);

struct EvolveOptions {
  Scheme scheme = Scheme::RK4;
  double c_cfl = 0.2;
  double eps0 = 0.1;          // blow-up when max |g - h|_h exceeds 3 eps0
  bool record_stats = true;
  /// Called with the initial state and after every step.
  std::function<void(const FlowState&)> observer;
};

/// Integrates from g0 at t = 0 to t_final. Steps are shortened so every snapshot time is hit
/// exactly. On blow-up the trajectory is returned truncated with a diagnostic.
FlowTrajectory evolve(const MetricField& g0, double t_final, const BackgroundMetric& bg,
                      const std::vector<double>& snapshot_times, const EvolveOptions& opts = {});

SnapshotStats snapshot_stats(const MetricField& g, const BackgroundMetric& bg);

struct OmegaDiagnostic {
  double L_const = 0.0;
  ScalarField omega;                  // on the first state
  ScalarField inequality_residual;    // c_eff per node
  ScalarField quartic_term;           // (3/4) L |hnabla g|^4
  double max_residual = 0.0;
};

/// omega = |hnabla g|^2 (1 + L |g - h|^2) and the nodewise residual
///   c_eff = d_t omega - g^{ab} hnabla_a hnabla_b omega + 8/7 |hnabla^2 g|^2 + 3/4 L |hnabla g|^4
/// with the time derivative differenced between the two states.
OmegaDiagnostic omega_monitor(const FlowState& state, const FlowState& next, const BackgroundMetric& bg,
                              double L_const);

}  // namespace rdtf
