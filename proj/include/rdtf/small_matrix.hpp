#pragma once

// Nodewise dense algebra on n x n matrices, n <= 3, stored row-major in std::array.

#include <algorithm>
#include <array>
#include <cmath>
#include <type_traits>
#include <utility>

#include "rdtf/errors.hpp"
#include "rdtf/grid.hpp"

namespace rdtf {

template <int D>
using Mat = std::array<double, D * D>;

template <int D>
using Vec = std::array<double, D>;

/// Calls f(std::integral_constant<int, D>{}) for the runtime dimension n.
template <class F>
decltype(auto) dispatch_dim(int n, F&& f) {
  switch (n) {
    case 1:
      return f(std::integral_constant<int, 1>{});
    case 2:
      return f(std::integral_constant<int, 2>{});
    case 3:
      return f(std::integral_constant<int, 3>{});
    default:
      throw StructuralError("unsupported dimension");
  }
}

template <int D>
Mat<D> unpack(const double* packed) {
  Mat<D> m{};
  int c = 0;
  for (int i = 0; i < D; ++i)
    for (int j = i; j < D; ++j) {
      m[i * D + j] = packed[c];
      m[j * D + i] = packed[c];
      ++c;
    }
  return m;
}

template <int D>
void pack(const Mat<D>& m, double* packed) {
  int c = 0;
  for (int i = 0; i < D; ++i)
    for (int j = i; j < D; ++j) packed[c++] = m[i * D + j];
}

template <int D>
Mat<D> identity() {
  Mat<D> m{};
  for (int i = 0; i < D; ++i) m[i * D + i] = 1.0;
  return m;
}

template <int D>
double determinant(const Mat<D>& a) {
  if constexpr (D == 1) {
    return a[0];
  } else if constexpr (D == 2) {
    return a[0] * a[3] - a[1] * a[2];
  } else {
    return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
           a[2] * (a[3] * a[7] - a[4] * a[6]);
  }
}

/// Cofactor inverse. Caller guarantees a nonzero determinant.
template <int D>
Mat<D> inverse(const Mat<D>& a) {
  Mat<D> r{};
  const double det = determinant<D>(a);
  const double s = 1.0 / det;
  if constexpr (D == 1) {
    r[0] = s;
  } else if constexpr (D == 2) {
    r[0] = a[3] * s;
    r[1] = -a[1] * s;
    r[2] = -a[2] * s;
    r[3] = a[0] * s;
  } else {
    r[0] = (a[4] * a[8] - a[5] * a[7]) * s;
    r[1] = (a[2] * a[7] - a[1] * a[8]) * s;
    r[2] = (a[1] * a[5] - a[2] * a[4]) * s;
    r[3] = (a[5] * a[6] - a[3] * a[8]) * s;
    r[4] = (a[0] * a[8] - a[2] * a[6]) * s;
    r[5] = (a[2] * a[3] - a[0] * a[5]) * s;
    r[6] = (a[3] * a[7] - a[4] * a[6]) * s;
    r[7] = (a[1] * a[6] - a[0] * a[7]) * s;
    r[8] = (a[0] * a[4] - a[1] * a[3]) * s;
  }
  return r;
}

template <int D>
Mat<D> multiply(const Mat<D>& a, const Mat<D>& b) {
  Mat<D> r{};
  for (int i = 0; i < D; ++i)
    for (int k = 0; k < D; ++k) {
      const double aik = a[i * D + k];
      for (int j = 0; j < D; ++j) r[i * D + j] += aik * b[k * D + j];
    }
  return r;
}

template <int D>
double trace(const Mat<D>& a) {
  double t = 0.0;
  for (int i = 0; i < D; ++i) t += a[i * D + i];
  return t;
}

/// Eigenvalues of a symmetric matrix, ascending. Closed form for D <= 3, cyclic Jacobi otherwise.
template <int D>
Vec<D> symmetric_eigenvalues(Mat<D> a) {
  if constexpr (D == 2) {
    const double m = 0.5 * (a[0] + a[3]);
    const double h = 0.5 * (a[0] - a[3]);
    const double r = std::hypot(h, a[1]);
    return Vec<D>{m - r, m + r};
  } else if constexpr (D == 3) {
    // trigonometric solution of the characteristic cubic on the shifted matrix
    const double q = (a[0] + a[4] + a[8]) / 3.0;
    const double off = a[1] * a[1] + a[2] * a[2] + a[5] * a[5];
    const double b0 = a[0] - q, b1 = a[4] - q, b2 = a[8] - q;
    const double p2 = b0 * b0 + b1 * b1 + b2 * b2 + 2.0 * off;
    if (p2 <= 0.0) return Vec<D>{q, q, q};
    const double pn = std::sqrt(p2 / 6.0);
    const double c0 = b0 / pn, c1 = b1 / pn, c2 = b2 / pn;
    const double e1 = a[1] / pn, e2 = a[2] / pn, e5 = a[5] / pn;
    const double det = c0 * (c1 * c2 - e5 * e5) - e1 * (e1 * c2 - e5 * e2) + e2 * (e1 * e5 - c1 * e2);
    const double r = std::clamp(0.5 * det, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double big = q + 2.0 * pn * std::cos(phi);
    const double small = q + 2.0 * pn * std::cos(phi + 2.0943951023931954923);
    return Vec<D>{small, 3.0 * q - big - small, big};
  } else if constexpr (D > 1) {
    for (int sweep = 0; sweep < 50; ++sweep) {
      double off = 0.0;
      for (int i = 0; i < D; ++i)
        for (int j = i + 1; j < D; ++j) off += a[i * D + j] * a[i * D + j];
      if (off < 1e-300) break;
      for (int p = 0; p < D; ++p)
        for (int q = p + 1; q < D; ++q) {
          const double apq = a[p * D + q];
          if (apq == 0.0) continue;
          const double theta = (a[q * D + q] - a[p * D + p]) / (2.0 * apq);
          const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
          const double c = 1.0 / std::sqrt(t * t + 1.0);
          const double s = t * c;
          for (int k = 0; k < D; ++k) {
            const double akp = a[k * D + p];
            const double akq = a[k * D + q];
            a[k * D + p] = c * akp - s * akq;
            a[k * D + q] = s * akp + c * akq;
          }
          for (int k = 0; k < D; ++k) {
            const double apk = a[p * D + k];
            const double aqk = a[q * D + k];
            a[p * D + k] = c * apk - s * aqk;
            a[q * D + k] = s * apk + c * aqk;
          }
        }
    }
  }
  Vec<D> ev{};
  for (int i = 0; i < D; ++i) ev[i] = a[i * D + i];
  std::sort(ev.begin(), ev.end());
  return ev;
}

/// Lower Cholesky factor of an SPD matrix; returns false if a pivot is non-positive.
template <int D>
bool cholesky(const Mat<D>& a, Mat<D>& l) {
  l = Mat<D>{};
  for (int j = 0; j < D; ++j) {
    double d = a[j * D + j];
    for (int k = 0; k < j; ++k) d -= l[j * D + k] * l[j * D + k];
    if (!(d > 0.0)) return false;
    l[j * D + j] = std::sqrt(d);
    for (int i = j + 1; i < D; ++i) {
      double s = a[i * D + j];
      for (int k = 0; k < j; ++k) s -= l[i * D + k] * l[j * D + k];
      l[i * D + j] = s / l[j * D + j];
    }
  }
  return true;
}

/// Eigenvalues of b^{-1} a for symmetric a and SPD b (ascending).
template <int D>
Vec<D> relative_eigenvalues(const Mat<D>& a, const Mat<D>& b) {
  Mat<D> l{};
  if (!cholesky<D>(b, l)) throw PreconditionError("relative_eigenvalues: reference matrix not SPD");
  const Mat<D> li = inverse<D>(l);
  Mat<D> lit{};
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) lit[i * D + j] = li[j * D + i];
  return symmetric_eigenvalues<D>(multiply<D>(multiply<D>(li, a), lit));
}

}  // namespace rdtf
