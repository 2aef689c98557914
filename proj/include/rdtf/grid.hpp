#pragma once

#include <array>
#include <cstddef>
#include <numbers>
#include <vector>

namespace rdtf {

inline constexpr int kMaxDim = 3;

/// Uniform periodic grid on the flat torus [0, L)^n with N nodes per axis.
///
/// Nodes are stored row-major: axis 0 is the slowest index, so
/// node = ((i0 * N) + i1) * N + i2 for n = 3.
class TorusGrid {
 public:
  TorusGrid() = default;
  TorusGrid(int dim, int res, double period = 2.0 * std::numbers::pi);

  int dim() const { return dim_; }
  int res() const { return res_; }
  double period() const { return period_; }
  double spacing() const { return period_ / res_; }
  std::size_t size() const { return size_; }
  /// Cell volume dx^n.
  double cell_volume() const;
  double volume() const;

  std::size_t stride(int axis) const { return stride_[axis]; }
  int index(std::size_t node, int axis) const {
    return static_cast<int>((node / stride_[axis]) % res_);
  }
  std::array<int, kMaxDim> indices(std::size_t node) const;
  std::size_t node(const std::array<int, kMaxDim>& idx) const;
  double coordinate(std::size_t node, int axis) const { return index(node, axis) * spacing(); }
  std::array<double, kMaxDim> position(std::size_t node) const;

  /// Offset (in nodes) that moves index i along `axis` by `shift`, wrapping periodically.
  std::ptrdiff_t wrap_offset(int i, int shift, int axis) const {
    int j = (i + shift) % res_;
    if (j < 0) j += res_;
    return static_cast<std::ptrdiff_t>(j - i) * static_cast<std::ptrdiff_t>(stride_[axis]);
  }

  /// Minimal-image periodic distance between a node and a point.
  double periodic_distance(std::size_t node, const std::array<double, kMaxDim>& point) const;

  friend bool operator==(const TorusGrid& a, const TorusGrid& b) {
    return a.dim_ == b.dim_ && a.res_ == b.res_ && a.period_ == b.period_;
  }

 private:
  int dim_ = 0;
  int res_ = 0;
  double period_ = 0.0;
  std::size_t size_ = 0;
  std::array<std::size_t, kMaxDim> stride_{};
};

/// Throws StructuralError when the grids differ.
void require_same_grid(const TorusGrid& a, const TorusGrid& b, const char* what);

/// One real value per node.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const TorusGrid& grid, double fill = 0.0)
      : grid_(grid), values_(grid.size(), fill) {}

  template <class F>
  static ScalarField from_function(const TorusGrid& grid, F&& f) {
    ScalarField out(grid);
    for (std::size_t p = 0; p < grid.size(); ++p) out[p] = f(grid.position(p));
    return out;
  }

  const TorusGrid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  double& operator[](std::size_t p) { return values_[p]; }
  double operator[](std::size_t p) const { return values_[p]; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  double max() const;
  double min() const;
  double max_abs() const;

 private:
  TorusGrid grid_;
  std::vector<double> values_;
};

enum class Slot { Up, Down };

/// General tensor field with declared valence. Components at each node are stored
/// row-major over the slots, so T^{i}_{jk} lives at i*n*n + j*n + k.
class TensorField {
 public:
  TensorField() = default;
  TensorField(const TorusGrid& grid, std::vector<Slot> slots);

  static TensorField vector(const TorusGrid& grid) { return TensorField(grid, {Slot::Up}); }
  static TensorField covector(const TorusGrid& grid) { return TensorField(grid, {Slot::Down}); }

  const TorusGrid& grid() const { return grid_; }
  const std::vector<Slot>& slots() const { return slots_; }
  int rank() const { return static_cast<int>(slots_.size()); }
  std::size_t components() const { return components_; }

  double* node(std::size_t p) { return values_.data() + p * components_; }
  const double* node(std::size_t p) const { return values_.data() + p * components_; }
  double& at(std::size_t p, std::size_t c) { return values_[p * components_ + c]; }
  double at(std::size_t p, std::size_t c) const { return values_[p * components_ + c]; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  double max_abs() const;

 private:
  TorusGrid grid_;
  std::vector<Slot> slots_;
  std::size_t components_ = 1;
  std::vector<double> values_;
};

using VectorField = TensorField;

/// Number of stored entries of a symmetric n x n matrix.
constexpr int packed_size(int n) { return n * (n + 1) / 2; }

/// Row-major upper-triangle packing: (0,0),(0,1),(0,2),(1,1),(1,2),(2,2).
constexpr int packed_index(int n, int i, int j) {
  if (i > j) {
    const int t = i;
    i = j;
    j = t;
  }
  return i * n - i * (i - 1) / 2 + (j - i);
}

/// Symmetric 2-tensor field with n(n+1)/2 stored entries per node; symmetry is exact by storage.
class MetricField {
 public:
  MetricField() = default;
  explicit MetricField(const TorusGrid& grid);

  /// Constant diagonal metric c * delta.
  static MetricField scaled_identity(const TorusGrid& grid, double c = 1.0);

  const TorusGrid& grid() const { return grid_; }
  int dim() const { return grid_.dim(); }
  int packed() const { return packed_; }

  double operator()(std::size_t p, int i, int j) const {
    return values_[p * packed_ + packed_index(grid_.dim(), i, j)];
  }
  double& operator()(std::size_t p, int i, int j) {
    return values_[p * packed_ + packed_index(grid_.dim(), i, j)];
  }
  double* node(std::size_t p) { return values_.data() + p * packed_; }
  const double* node(std::size_t p) const { return values_.data() + p * packed_; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  /// Full (unpacked) rank-2 covariant tensor.
  TensorField to_tensor() const;
  /// Symmetric part of a rank-2 tensor; non-symmetric input is averaged.
  static MetricField from_tensor(const TensorField& t);

 private:
  TorusGrid grid_;
  int packed_ = 0;
  std::vector<double> values_;
};

}  // namespace rdtf
