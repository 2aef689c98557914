#include "rdtf/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rdtf/errors.hpp"

namespace rdtf {

TorusGrid::TorusGrid(int dim, int res, double period) : dim_(dim), res_(res), period_(period) {
  if (dim < 1 || dim > kMaxDim) throw PreconditionError("grid dimension must be 1, 2 or 3");
  if (res < 8 || (res & (res - 1)) != 0)
    throw PreconditionError("grid resolution must be a power of two and at least 8");
  if (!(period > 0.0)) throw PreconditionError("grid period must be positive");
  size_ = 1;
  for (int a = 0; a < dim; ++a) size_ *= static_cast<std::size_t>(res);
  std::size_t s = 1;
  for (int a = dim - 1; a >= 0; --a) {
    stride_[a] = s;
    s *= static_cast<std::size_t>(res);
  }
}

double TorusGrid::cell_volume() const { return std::pow(spacing(), dim_); }

double TorusGrid::volume() const { return std::pow(period_, dim_); }

std::array<int, kMaxDim> TorusGrid::indices(std::size_t node) const {
  std::array<int, kMaxDim> idx{};
  for (int a = 0; a < dim_; ++a) idx[a] = index(node, a);
  return idx;
}

std::size_t TorusGrid::node(const std::array<int, kMaxDim>& idx) const {
  std::size_t p = 0;
  for (int a = 0; a < dim_; ++a) {
    int i = idx[a] % res_;
    if (i < 0) i += res_;
    p += static_cast<std::size_t>(i) * stride_[a];
  }
  return p;
}

std::array<double, kMaxDim> TorusGrid::position(std::size_t node) const {
  std::array<double, kMaxDim> x{};
  for (int a = 0; a < dim_; ++a) x[a] = coordinate(node, a);
  return x;
}

double TorusGrid::periodic_distance(std::size_t node,
                                    const std::array<double, kMaxDim>& point) const {
  double d2 = 0.0;
  for (int a = 0; a < dim_; ++a) {
    double d = std::fmod(coordinate(node, a) - point[a], period_);
    if (d > 0.5 * period_) d -= period_;
    if (d < -0.5 * period_) d += period_;
    d2 += d * d;
  }
  return std::sqrt(d2);
}

void require_same_grid(const TorusGrid& a, const TorusGrid& b, const char* what) {
  if (!(a == b)) {
    std::ostringstream msg;
    msg << what << ": grid mismatch (" << a.dim() << "d/" << a.res() << " vs " << b.dim() << "d/"
        << b.res() << ")";
    throw StructuralError(msg.str());
  }
}

double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }

double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }

double ScalarField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

TensorField::TensorField(const TorusGrid& grid, std::vector<Slot> slots)
    : grid_(grid), slots_(std::move(slots)) {
  components_ = 1;
  for (std::size_t s = 0; s < slots_.size(); ++s) components_ *= static_cast<std::size_t>(grid.dim());
  values_.assign(grid.size() * components_, 0.0);
}

double TensorField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

MetricField::MetricField(const TorusGrid& grid)
    : grid_(grid), packed_(packed_size(grid.dim())), values_(grid.size() * packed_, 0.0) {}

MetricField MetricField::scaled_identity(const TorusGrid& grid, double c) {
  MetricField g(grid);
  for (std::size_t p = 0; p < grid.size(); ++p)
    for (int i = 0; i < grid.dim(); ++i) g(p, i, i) = c;
  return g;
}

TensorField MetricField::to_tensor() const {
  const int n = dim();
  TensorField t(grid_, {Slot::Down, Slot::Down});
  for (std::size_t p = 0; p < grid_.size(); ++p)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) t.at(p, i * n + j) = (*this)(p, i, j);
  return t;
}

MetricField MetricField::from_tensor(const TensorField& t) {
  if (t.rank() != 2) throw StructuralError("MetricField::from_tensor: rank-2 tensor required");
  MetricField g(t.grid());
  const int n = g.dim();
  for (std::size_t p = 0; p < t.grid().size(); ++p)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) g(p, i, j) = 0.5 * (t.at(p, i * n + j) + t.at(p, j * n + i));
  return g;
}

}  // namespace rdtf
