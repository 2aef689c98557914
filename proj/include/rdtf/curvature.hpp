#pragma once

// Curvature of an evolving metric, the volume ratio dg/dh and the Lee-LeFloch pairing.

#include "rdtf/grid.hpp"
#include "rdtf/tensor_core.hpp"

namespace rdtf {

/// Ric(g)_{ij} by the coordinate formula, full (Down, Down) storage.
TensorField ricci(const MetricField& g);
ScalarField scalar_curvature(const MetricField& g);
/// R_g together with |Ric(g)|_g^2 in one pass.
void scalar_and_ricci_sq(const MetricField& g, ScalarField& scalar, ScalarField& ricci_sq);

/// sqrt(det g / det h) per node.
ScalarField volume_ratio(const MetricField& g, const BackgroundMetric& bg);

struct LeeLeFlochTerms {
  TensorField T;          // T^i_{jk}, (Up, Down, Down)
  ScalarField L;
  TensorField Z;          // Z^k
  ScalarField vol_ratio;  // dg/dh
};

/// T^i_jk = 1/2 g^il (hnabla_j g_kl + hnabla_k g_jl - hnabla_l g_jk)
/// L = g^ij Ric(h)_ij - (hnabla_k g^ij) T^k_ij + (hnabla_k g^ik) T^j_ji + g^ij (T^k_kl T^l_ij - T^k_jl T^l_ik)
/// Z^k = g^ij T^k_ij - g^ik T^j_ji
/// Only first derivatives of g are taken; hnabla g^-1 comes from the chain rule.
LeeLeFlochTerms lee_lefloch_terms(const MetricField& g, const BackgroundMetric& bg);

/// Integral of L psi - h(Z, hnabla psi) + b psi against dh, psi = phi dg/dh.
/// For smooth g this equals the integral of (R_g + b) phi dg. Throws if phi < 0 somewhere.
double distributional_pairing(const MetricField& g, const BackgroundMetric& bg, const ScalarField& phi, double b);

/// Integral of (R_g + b) phi dg.
double smooth_pairing(const MetricField& g, const ScalarField& phi, double b);

}  // namespace rdtf
