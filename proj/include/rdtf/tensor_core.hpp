#pragma once

// Periodic tensor calculus relative to a fixed background metric h.

#include <vector>

#include "rdtf/grid.hpp"

namespace rdtf {

/// Fixed reference metric h with its precomputed connection and curvature.
///
/// Curvature convention: Rm_{ijkl} is stored so that Ric_{ij} = h^{kl} Rm_{ikjl} and
/// Rm_{ijij} equals the sectional curvature of span(e_i, e_j) times |e_i ^ e_j|^2.
struct BackgroundMetric {
  MetricField h;
  MetricField h_inv;
  ScalarField sqrt_det;              // sqrt(det h), the density of dh
  TensorField christoffel;           // Gamma^i_{jk}            (Up, Down, Down)
  TensorField christoffel_grad;      // d_a Gamma^i_{jk}        (Down, Up, Down, Down)
  TensorField riemann;               // Rm_{ijkl}               (Down x 4)
  TensorField riemann_grad;          // hnabla_a Rm_{ijkl}      (Down x 5)
  TensorField ricci;                 // Ric(h)_{ij}
  double K0 = 0.0;                   // max-node |Rm(h)|_h
  double K1 = 0.0;                   // max-node |hnabla Rm(h)|_h
  bool flat = true;                  // Gamma(h) == 0 identically; hnabla is the coordinate derivative
  bool identity = true;              // h == delta exactly; h-norms are Euclidean

  const TorusGrid& grid() const { return h.grid(); }
};

/// h = delta on the given grid.
BackgroundMetric flat_background(const TorusGrid& grid);

/// Precomputes Gamma(h), Rm(h), hnabla Rm(h) and the sup-norms K0, K1 from 4th-order differences of h.
BackgroundMetric background_curvature(const MetricField& h);

/// Conformal perturbation (1 + a s(x)) delta with s the mean of sin(2 pi m.x / L) over the given
/// integer wave vectors.
MetricField perturbed_background_metric(const TorusGrid& grid, double amplitude,
                                        const std::vector<std::vector<int>>& modes);

/// Nodewise inverse, returned as an (Up, Up) tensor. Throws SpdError on the first bad node.
TensorField metric_inverse(const MetricField& g);
/// Same, kept in packed symmetric storage.
MetricField inverse_metric_field(const MetricField& g);

/// Throws SpdError unless every node has smallest eigenvalue > 1e-10 * trace / n.
void require_spd(const MetricField& g);

/// sqrt(det g) per node.
ScalarField sqrt_det(const MetricField& g);

/// hnabla T: output has a new leading Down slot (derivative index first).
TensorField hcov_deriv(const TensorField& t, const BackgroundMetric& bg);

/// hnabla hnabla T with the two derivative indices leading: (hnabla_a hnabla_b T).
/// Pure second derivatives use the compact stencil.
TensorField hcov_hessian(const TensorField& t, const BackgroundMetric& bg);

/// Pointwise |T|_h.
ScalarField tensor_norm_h(const TensorField& t, const BackgroundMetric& bg);

/// Sum over nodes of f * vol * dx^n with a fixed pairwise reduction.
double integrate(const ScalarField& f, const ScalarField& vol);
/// Sum over nodes of f * dx^n.
double integrate(const ScalarField& f);

/// h-covariant first and second derivatives of a symmetric 2-tensor, full index storage:
///   grad[((p * n + a) * n + i) * n + j]          = hnabla_a g_ij
///   hess[(((p * n + a) * n + b) * n + i) * n + j] = hnabla_a hnabla_b g_ij
struct MetricJet {
  int dim = 0;
  std::vector<double> grad;
  std::vector<double> hess;

  const double* grad_at(std::size_t p) const { return grad.data() + p * dim * dim * dim; }
  const double* hess_at(std::size_t p) const { return hess.data() + p * dim * dim * dim * dim; }
};

MetricJet metric_jet(const MetricField& g, const BackgroundMetric& bg, bool with_hessian);

/// Pointwise |hnabla g|_h^2 and, when the jet carries a Hessian, |hnabla^2 g|_h^2.
ScalarField grad_norm_sq(const MetricJet& jet, const BackgroundMetric& bg);
ScalarField hess_norm_sq(const MetricJet& jet, const BackgroundMetric& bg);

/// Pointwise |g - g_ref|_h (Frobenius norm relative to h).
ScalarField difference_norm(const MetricField& g, const MetricField& g_ref, const BackgroundMetric& bg);

/// Smallest eps with (1 - eps) h <= g <= (1 + eps) h at every node.
double pinning_deviation(const MetricField& g, const BackgroundMetric& bg);

/// Largest eigenvalue of g^{-1} h over all nodes.
double max_inverse_eigenvalue(const MetricField& g, const BackgroundMetric& bg);

}  // namespace rdtf
