#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace pascali {

using cplx = std::complex<double>;

/// Uniform cell-centred sampling of the square
/// [center - half_width, center + half_width]^2 in the complex plane.
///
/// Node (i, j) sits at the centre of cell (i, j): i runs along the real axis,
/// j along the imaginary axis. The resolution is a power of two, at least 16.
class Grid {
 public:
  Grid(cplx center, double half_width, int resolution);

  cplx center() const { return center_; }
  double half_width() const { return half_width_; }
  int size() const { return n_; }
  double spacing() const { return h_; }
  std::size_t node_count() const { return std::size_t(n_) * std::size_t(n_); }

  cplx node(int i, int j) const {
    return center_ + cplx((i + 0.5) * h_ - half_width_, (j + 0.5) * h_ - half_width_);
  }
  cplx node(std::size_t k) const { return node(int(k / std::size_t(n_)), int(k % std::size_t(n_))); }
  std::size_t index(int i, int j) const { return std::size_t(i) * std::size_t(n_) + std::size_t(j); }

  /// Continuous index coordinates of z: node (i, j) maps to (i, j) exactly.
  std::pair<double, double> locate(cplx z) const;
  bool contains(cplx z) const;

  bool operator==(const Grid& other) const = default;

 private:
  cplx center_;
  double half_width_;
  int n_;
  double h_;
};

/// A C^dim-valued function sampled at every node of a grid.
/// Storage is node-major: the dim components of node k are contiguous.
class GridFunction {
 public:
  GridFunction(const Grid& grid, int dim);

  const Grid& grid() const { return grid_; }
  int dim() const { return dim_; }

  cplx& at(int i, int j, int c = 0) { return values_[grid_.index(i, j) * std::size_t(dim_) + std::size_t(c)]; }
  cplx at(int i, int j, int c = 0) const { return values_[grid_.index(i, j) * std::size_t(dim_) + std::size_t(c)]; }

  std::span<cplx> node(std::size_t k) { return {values_.data() + k * std::size_t(dim_), std::size_t(dim_)}; }
  std::span<const cplx> node(std::size_t k) const {
    return {values_.data() + k * std::size_t(dim_), std::size_t(dim_)};
  }

  std::span<cplx> values() { return values_; }
  std::span<const cplx> values() const { return values_; }

  /// Euclidean norm of the vector at node k.
  double norm_at(std::size_t k) const;
  bool all_finite() const;

  /// One component as a scalar grid function.
  GridFunction component(int c) const;

  GridFunction& operator+=(const GridFunction& other);
  GridFunction& operator-=(const GridFunction& other);
  GridFunction& operator*=(cplx a);

  friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
  friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
  friend GridFunction operator*(cplx a, GridFunction b) { return b *= a; }

  /// Pointwise product with a scalar field (dim 1).
  GridFunction scaled_by(const GridFunction& scalar) const;
  GridFunction conjugated() const;

 private:
  Grid grid_;
  int dim_;
  std::vector<cplx> values_;
};

/// Boolean selection of grid nodes; the discrete carrier of planar domains.
class Mask {
 public:
  explicit Mask(const Grid& grid, bool fill = false);

  const Grid& grid() const { return grid_; }
  bool operator[](std::size_t k) const { return inside_[k] != 0; }
  bool at(int i, int j) const { return inside_[grid_.index(i, j)] != 0; }
  void set(std::size_t k, bool v) { inside_[k] = v ? 1 : 0; }
  void set(int i, int j, bool v) { set(grid_.index(i, j), v); }

  std::size_t count() const;
  bool empty() const { return count() == 0; }
  std::vector<std::size_t> indices() const;

  Mask operator|(const Mask& other) const;
  Mask operator&(const Mask& other) const;
  Mask operator-(const Mask& other) const;
  Mask operator~() const;
  bool subset_of(const Mask& other) const;
  bool operator==(const Mask& other) const = default;

  /// Removes every node within Chebyshev distance k of a node outside the
  /// mask; nodes within k of the box edge are removed as well.
  Mask eroded(int k) const;
  /// Nodes within Euclidean distance `cells` (in grid spacings) of the mask.
  Mask dilated(double cells) const;

  /// Mask of nodes where pred(node coordinate) holds.
  static Mask from_predicate(const Grid& grid, const std::function<bool(cplx)>& pred);
  static Mask disk(const Grid& grid, cplx center, double radius);

 private:
  Grid grid_;
  std::vector<std::uint8_t> inside_;
};

/// Exact Euclidean distance (in grid spacings) from every node to the nearest
/// node of a mask, together with the index of that nearest node.
struct DistanceField {
  std::vector<double> distance;
  std::vector<std::size_t> nearest;
};

DistanceField distance_to(const Mask& m);

using PointFunction = std::function<void(cplx z, std::span<cplx> out)>;

/// values[i][j] = fn(node(i, j)); throws NonFiniteError at the first bad node.
GridFunction sample(const Grid& grid, int dim, const PointFunction& fn);
GridFunction sample_scalar(const Grid& grid, const std::function<cplx(cplx)>& fn);

/// Centred differences in the interior, second-order one-sided at box edges.
GridFunction diff_x(const GridFunction& w);
GridFunction diff_y(const GridFunction& w);
/// (d/dx + i d/dy) / 2
GridFunction dbar_fd(const GridFunction& w);

double sup_norm(const GridFunction& w, const Mask& m);
/// sup|w| + sup|w_x| + sup|w_y| on the mask eroded by one cell.
double c1_norm_proxy(const GridFunction& w, const Mask& m);

/// Local tensor-product cubic interpolation of w at an arbitrary point;
/// the stencil is clamped at box edges.
void interpolate(const GridFunction& w, cplx z, std::span<cplx> out);
cplx interpolate_scalar(const GridFunction& w, cplx z);

/// Bilinear interpolation; preserves bounds of the sampled values.
double interpolate_linear(const Grid& grid, std::span<const double> values, cplx z);

}  // namespace pascali
