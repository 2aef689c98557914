#pragma once

// Nodewise coordinate formulas shared by the background and curvature modules.

#include <vector>

#include "rdtf/grid.hpp"
#include "rdtf/small_matrix.hpp"

namespace rdtf::detail {

/// Adds the connection terms of hnabla_a to out for a tensor with the given slots:
///   + Gamma^{i}_{a e} X^{..e..}   for each Up slot
///   - Gamma^{e}_{a j} X_{..e..}   for each Down slot
/// gamma is laid out as Gamma^i_{jk} at i*n*n + j*n + k.
inline void add_connection(int n, const std::vector<Slot>& slots, const double* gamma, int a,
                           const double* x, double* out, std::size_t ncomp) {
  const int rank = static_cast<int>(slots.size());
  int digits[8];
  int weights[8];
  {
    int w = 1;
    for (int s = rank - 1; s >= 0; --s) {
      weights[s] = w;
      w *= n;
    }
  }
  for (std::size_t c = 0; c < ncomp; ++c) {
    int rem = static_cast<int>(c);
    for (int s = 0; s < rank; ++s) {
      digits[s] = rem / weights[s];
      rem %= weights[s];
    }
    double acc = 0.0;
    for (int s = 0; s < rank; ++s) {
      const int base = static_cast<int>(c) - digits[s] * weights[s];
      for (int e = 0; e < n; ++e) {
        const double xe = x[base + e * weights[s]];
        if (slots[s] == Slot::Up)
          acc += gamma[(digits[s] * n + a) * n + e] * xe;
        else
          acc -= gamma[(e * n + a) * n + digits[s]] * xe;
      }
    }
    out[c] += acc;
  }
}

/// Christoffel symbols and their coordinate derivatives from the metric jet.
///   g, ginv: D x D; dg[a][i][j]; ddg[a][b][i][j] (full, symmetric in a,b)
///   gamma[k][i][j], dgamma[m][k][i][j]
template <int D>
void christoffel_jet(const Mat<D>& ginv, const double* dg, const double* ddg, double* gamma,
                     double* dgamma) {
  auto DG = [&](int a, int i, int j) { return dg[(a * D + i) * D + j]; };
  auto DDG = [&](int a, int b, int i, int j) { return ddg[((a * D + b) * D + i) * D + j]; };
  // lowered symbols Gamma_{l i j} = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
  double low[D * D * D];
  for (int l = 0; l < D; ++l)
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) low[(l * D + i) * D + j] = 0.5 * (DG(i, j, l) + DG(j, i, l) - DG(l, i, j));
  for (int k = 0; k < D; ++k)
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) {
        double s = 0.0;
        for (int l = 0; l < D; ++l) s += ginv[k * D + l] * low[(l * D + i) * D + j];
        gamma[(k * D + i) * D + j] = s;
      }
  if (dgamma == nullptr) return;
  for (int m = 0; m < D; ++m) {
    // d_m g^{kl} = -g^{ka} d_m g_ab g^{bl}
    double dginv[D * D];
    for (int k = 0; k < D; ++k)
      for (int l = 0; l < D; ++l) {
        double s = 0.0;
        for (int a = 0; a < D; ++a)
          for (int b = 0; b < D; ++b) s += ginv[k * D + a] * DG(m, a, b) * ginv[b * D + l];
        dginv[k * D + l] = -s;
      }
    for (int k = 0; k < D; ++k)
      for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j) {
          double s = 0.0;
          for (int l = 0; l < D; ++l) {
            const double dlow = 0.5 * (DDG(m, i, j, l) + DDG(m, j, i, l) - DDG(m, l, i, j));
            s += dginv[k * D + l] * low[(l * D + i) * D + j] + ginv[k * D + l] * dlow;
          }
          dgamma[((m * D + k) * D + i) * D + j] = s;
        }
  }
}

/// R^l_{ijk} = d_i Gamma^l_{jk} - d_j Gamma^l_{ik} + Gamma^l_{im} Gamma^m_{jk} - Gamma^l_{jm} Gamma^m_{ik}
/// stored at riem_up[((l * D + i) * D + j) * D + k]; Ric_{jk} = R^i_{ijk}.
template <int D>
void riemann_up(const double* gamma, const double* dgamma, double* riem) {
  auto G = [&](int k, int i, int j) { return gamma[(k * D + i) * D + j]; };
  auto dG = [&](int m, int k, int i, int j) { return dgamma[((m * D + k) * D + i) * D + j]; };
  for (int l = 0; l < D; ++l)
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j)
        for (int k = 0; k < D; ++k) {
          double s = dG(i, l, j, k) - dG(j, l, i, k);
          for (int m = 0; m < D; ++m) s += G(l, i, m) * G(m, j, k) - G(l, j, m) * G(m, i, k);
          riem[((l * D + i) * D + j) * D + k] = s;
        }
}

template <int D>
void ricci_from_riemann(const double* riem, double* ric) {
  for (int j = 0; j < D; ++j)
    for (int k = 0; k < D; ++k) {
      double s = 0.0;
      for (int i = 0; i < D; ++i) s += riem[((i * D + i) * D + j) * D + k];
      ric[j * D + k] = s;
    }
}

/// Fills full first/second partial arrays of a packed symmetric field at node p.
template <int D>
void unpack_partials(const std::vector<double>& first, const std::vector<double>& second,
                     std::size_t p, double* dg, double* ddg) {
  constexpr int P = packed_size(D);
  for (int a = 0; a < D; ++a)
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j)
        dg[(a * D + i) * D + j] = first[(p * D + a) * P + packed_index(D, i, j)];
  if (ddg == nullptr) return;
  for (int a = 0; a < D; ++a)
    for (int b = 0; b < D; ++b)
      for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j)
          ddg[((a * D + b) * D + i) * D + j] =
              second[(p * P + packed_index(D, a, b)) * P + packed_index(D, i, j)];
}

}  // namespace rdtf::detail
