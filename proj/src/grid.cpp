#include "pascali/grid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "pascali/errors.hpp"

namespace pascali {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void require_same(const GridFunction& a, const GridFunction& b) {
  if (!(a.grid() == b.grid()) || a.dim() != b.dim()) {
    throw DimensionError("grid function operands differ in grid or dimension");
  }
}

void require_grid(const Grid& a, const Grid& b) {
  if (!(a == b)) throw DimensionError("operands live on different grids");
}

// One-dimensional squared distance transform of a sampled function
// (lower envelope of parabolas). Entries of f equal to +inf are ignored.
void distance_transform_1d(std::span<const double> f, std::span<double> d, std::span<int> arg) {
  const int n = int(f.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<int> v(static_cast<std::size_t>(n));
  std::vector<double> z(std::size_t(n) + 1);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == inf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -inf;
      z[1] = inf;
      continue;
    }
    double s = 0.0;
    while (true) {
      const int p = v[std::size_t(k)];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s <= z[std::size_t(k)]) {
        if (--k < 0) break;
      } else {
        break;
      }
    }
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -inf;
      z[1] = inf;
      continue;
    }
    ++k;
    v[std::size_t(k)] = q;
    z[std::size_t(k)] = s;
    z[std::size_t(k) + 1] = inf;
  }
  if (k < 0) {
    std::fill(d.begin(), d.end(), inf);
    std::fill(arg.begin(), arg.end(), -1);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[std::size_t(j) + 1] < q) ++j;
    const int p = v[std::size_t(j)];
    d[q] = double(q - p) * (q - p) + f[p];
    arg[q] = p;
  }
}

// Lagrange weights of a 4-point stencil at fractional position t in [0, 3].
std::array<double, 4> cubic_weights(double t) {
  std::array<double, 4> w{};
  for (int a = 0; a < 4; ++a) {
    double num = 1.0;
    double den = 1.0;
    for (int b = 0; b < 4; ++b) {
      if (b == a) continue;
      num *= (t - b);
      den *= (a - b);
    }
    w[std::size_t(a)] = num / den;
  }
  return w;
}

}  // namespace

// ---------------------------------------------------------------- Grid

Grid::Grid(cplx center, double half_width, int resolution)
    : center_(center), half_width_(half_width), n_(resolution), h_(0.0) {
  if (!(half_width > 0.0) || !std::isfinite(half_width)) {
    throw DomainError("grid half_width must be positive and finite");
  }
  if (resolution < 16 || !is_power_of_two(resolution)) {
    throw DomainError("grid resolution must be a power of two >= 16, got " + std::to_string(resolution));
  }
  if (!std::isfinite(center.real()) || !std::isfinite(center.imag())) {
    throw DomainError("grid center must be finite");
  }
  h_ = 2.0 * half_width / resolution;
}

std::pair<double, double> Grid::locate(cplx z) const {
  const cplx d = z - center_;
  return {(d.real() + half_width_) / h_ - 0.5, (d.imag() + half_width_) / h_ - 0.5};
}

bool Grid::contains(cplx z) const {
  const cplx d = z - center_;
  return std::abs(d.real()) <= half_width_ && std::abs(d.imag()) <= half_width_;
}

// ---------------------------------------------------------------- GridFunction

GridFunction::GridFunction(const Grid& grid, int dim) : grid_(grid), dim_(dim) {
  if (dim < 1) throw DimensionError("grid function dimension must be >= 1");
  values_.assign(grid.node_count() * std::size_t(dim), cplx(0.0, 0.0));
}

double GridFunction::norm_at(std::size_t k) const {
  double s = 0.0;
  for (const cplx& v : node(k)) s += std::norm(v);
  return std::sqrt(s);
}

bool GridFunction::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](const cplx& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
}

GridFunction GridFunction::component(int c) const {
  if (c < 0 || c >= dim_) throw DimensionError("component index out of range");
  GridFunction out(grid_, 1);
  for (std::size_t k = 0; k < grid_.node_count(); ++k) out.values_[k] = node(k)[std::size_t(c)];
  return out;
}

GridFunction& GridFunction::operator+=(const GridFunction& other) {
  require_same(*this, other);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
  return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& other) {
  require_same(*this, other);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
  return *this;
}

GridFunction& GridFunction::operator*=(cplx a) {
  for (auto& v : values_) v *= a;
  return *this;
}

GridFunction GridFunction::scaled_by(const GridFunction& scalar) const {
  require_grid(grid_, scalar.grid());
  if (scalar.dim() != 1) throw DimensionError("scaled_by expects a scalar field");
  GridFunction out(*this);
  for (std::size_t k = 0; k < grid_.node_count(); ++k) {
    for (auto& v : out.node(k)) v *= scalar.values_[k];
  }
  return out;
}

GridFunction GridFunction::conjugated() const {
  GridFunction out(*this);
  for (auto& v : out.values_) v = std::conj(v);
  return out;
}

// ---------------------------------------------------------------- Mask

Mask::Mask(const Grid& grid, bool fill) : grid_(grid), inside_(grid.node_count(), fill ? 1 : 0) {}

std::size_t Mask::count() const { return std::size_t(std::count(inside_.begin(), inside_.end(), 1)); }

std::vector<std::size_t> Mask::indices() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < inside_.size(); ++k)
    if (inside_[k]) out.push_back(k);
  return out;
}

Mask Mask::operator|(const Mask& other) const {
  require_grid(grid_, other.grid_);
  Mask out(grid_);
  for (std::size_t k = 0; k < inside_.size(); ++k) out.inside_[k] = inside_[k] | other.inside_[k];
  return out;
}

Mask Mask::operator&(const Mask& other) const {
  require_grid(grid_, other.grid_);
  Mask out(grid_);
  for (std::size_t k = 0; k < inside_.size(); ++k) out.inside_[k] = inside_[k] & other.inside_[k];
  return out;
}

Mask Mask::operator-(const Mask& other) const {
  require_grid(grid_, other.grid_);
  Mask out(grid_);
  for (std::size_t k = 0; k < inside_.size(); ++k) out.inside_[k] = inside_[k] & (other.inside_[k] ^ 1);
  return out;
}

Mask Mask::operator~() const {
  Mask out(grid_);
  for (std::size_t k = 0; k < inside_.size(); ++k) out.inside_[k] = inside_[k] ^ 1;
  return out;
}

bool Mask::subset_of(const Mask& other) const {
  require_grid(grid_, other.grid_);
  for (std::size_t k = 0; k < inside_.size(); ++k)
    if (inside_[k] && !other.inside_[k]) return false;
  return true;
}

Mask Mask::eroded(int k) const {
  if (k <= 0) return *this;
  const int n = grid_.size();
  // Separable min filter: first along j, then along i.
  std::vector<std::uint8_t> tmp(inside_.size(), 0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      std::uint8_t v = 1;
      if (j - k < 0 || j + k >= n) {
        v = 0;
      } else {
        for (int d = -k; d <= k && v; ++d) v &= inside_[grid_.index(i, j + d)];
      }
      tmp[grid_.index(i, j)] = v;
    }
  }
  Mask out(grid_);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      std::uint8_t v = 1;
      if (i - k < 0 || i + k >= n) {
        v = 0;
      } else {
        for (int d = -k; d <= k && v; ++d) v &= tmp[grid_.index(i + d, j)];
      }
      out.inside_[grid_.index(i, j)] = v;
    }
  }
  return out;
}

Mask Mask::dilated(double cells) const {
  if (cells <= 0.0) return *this;
  const DistanceField df = distance_to(*this);
  Mask out(grid_);
  for (std::size_t k = 0; k < inside_.size(); ++k) out.inside_[k] = df.distance[k] <= cells ? 1 : 0;
  return out;
}

Mask Mask::from_predicate(const Grid& grid, const std::function<bool(cplx)>& pred) {
  Mask out(grid);
  for (std::size_t k = 0; k < grid.node_count(); ++k) out.inside_[k] = pred(grid.node(k)) ? 1 : 0;
  return out;
}

Mask Mask::disk(const Grid& grid, cplx center, double radius) {
  return from_predicate(grid, [=](cplx z) { return std::abs(z - center) < radius; });
}

// ---------------------------------------------------------------- distance field

DistanceField distance_to(const Mask& m) {
  const Grid& g = m.grid();
  const int n = g.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> f(static_cast<std::size_t>(n)), d(static_cast<std::size_t>(n));
  std::vector<int> arg(static_cast<std::size_t>(n));
  // Pass 1 along j for every i.
  std::vector<double> d1(g.node_count());
  std::vector<int> nj(g.node_count());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) f[std::size_t(j)] = m.at(i, j) ? 0.0 : inf;
    distance_transform_1d(f, d, arg);
    for (int j = 0; j < n; ++j) {
      d1[g.index(i, j)] = d[std::size_t(j)];
      nj[g.index(i, j)] = arg[std::size_t(j)];
    }
  }
  DistanceField out;
  out.distance.assign(g.node_count(), inf);
  out.nearest.assign(g.node_count(), std::size_t(-1));
  // Pass 2 along i for every j.
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) f[std::size_t(i)] = d1[g.index(i, j)];
    distance_transform_1d(f, d, arg);
    for (int i = 0; i < n; ++i) {
      const std::size_t k = g.index(i, j);
      if (arg[std::size_t(i)] < 0) continue;
      const int qi = arg[std::size_t(i)];
      out.distance[k] = std::sqrt(d[std::size_t(i)]);
      out.nearest[k] = g.index(qi, nj[g.index(qi, j)]);
    }
  }
  return out;
}

// ---------------------------------------------------------------- sampling

GridFunction sample(const Grid& grid, int dim, const PointFunction& fn) {
  GridFunction out(grid, dim);
  for (std::size_t k = 0; k < grid.node_count(); ++k) {
    const cplx z = grid.node(k);
    auto slot = out.node(k);
    fn(z, slot);
    for (const cplx& v : slot) {
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
        std::ostringstream os;
        os << "non-finite sample at node (" << z.real() << ", " << z.imag() << ")";
        throw NonFiniteError(os.str(), z);
      }
    }
  }
  return out;
}

GridFunction sample_scalar(const Grid& grid, const std::function<cplx(cplx)>& fn) {
  return sample(grid, 1, [&](cplx z, std::span<cplx> out) { out[0] = fn(z); });
}

// ---------------------------------------------------------------- differences

namespace {

// axis 0: derivative along i (x); axis 1: along j (y).
GridFunction diff_axis(const GridFunction& w, int axis) {
  const Grid& g = w.grid();
  const int n = g.size();
  const int dim = w.dim();
  const double h = g.spacing();
  GridFunction out(g, dim);
  auto val = [&](int i, int j, int c) { return w.at(i, j, c); };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int p = axis == 0 ? i : j;
      for (int c = 0; c < dim; ++c) {
        auto at = [&](int q) { return axis == 0 ? val(q, j, c) : val(i, q, c); };
        cplx d;
        if (p == 0) {
          d = (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
        } else if (p == n - 1) {
          d = (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h);
        } else {
          d = (at(p + 1) - at(p - 1)) / (2.0 * h);
        }
        out.at(i, j, c) = d;
      }
    }
  }
  return out;
}

}  // namespace

GridFunction diff_x(const GridFunction& w) { return diff_axis(w, 0); }
GridFunction diff_y(const GridFunction& w) { return diff_axis(w, 1); }

GridFunction dbar_fd(const GridFunction& w) {
  GridFunction dx = diff_x(w);
  const GridFunction dy = diff_y(w);
  auto a = dx.values();
  auto b = dy.values();
  for (std::size_t k = 0; k < a.size(); ++k) a[k] = 0.5 * (a[k] + cplx(0.0, 1.0) * b[k]);
  return dx;
}

double sup_norm(const GridFunction& w, const Mask& m) {
  require_grid(w.grid(), m.grid());
  double best = 0.0;
  bool any = false;
  for (std::size_t k = 0; k < w.grid().node_count(); ++k) {
    if (!m[k]) continue;
    any = true;
    best = std::max(best, w.norm_at(k));
  }
  if (!any) throw DomainError("sup_norm over an empty mask");
  return best;
}

double c1_norm_proxy(const GridFunction& w, const Mask& m) {
  if (m.empty()) throw DomainError("c1_norm_proxy over an empty mask");
  const Mask inner = m.eroded(1);
  if (inner.empty()) throw DomainError("c1_norm_proxy: mask erodes to empty");
  return sup_norm(w, inner) + sup_norm(diff_x(w), inner) + sup_norm(diff_y(w), inner);
}

// ---------------------------------------------------------------- interpolation

void interpolate(const GridFunction& w, cplx z, std::span<cplx> out) {
  const Grid& g = w.grid();
  const int n = g.size();
  if (int(out.size()) != w.dim()) throw DimensionError("interpolate: output size mismatch");
  const auto [u, v] = g.locate(z);
  const int i0 = std::clamp(int(std::floor(u)) - 1, 0, n - 4);
  const int j0 = std::clamp(int(std::floor(v)) - 1, 0, n - 4);
  const auto wu = cubic_weights(u - i0);
  const auto wv = cubic_weights(v - j0);
  std::fill(out.begin(), out.end(), cplx(0.0, 0.0));
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      const double wt = wu[std::size_t(a)] * wv[std::size_t(b)];
      const auto vals = w.node(g.index(i0 + a, j0 + b));
      for (std::size_t c = 0; c < out.size(); ++c) out[c] += wt * vals[c];
    }
  }
}

cplx interpolate_scalar(const GridFunction& w, cplx z) {
  cplx out[1];
  interpolate(w, z, out);
  return out[0];
}

double interpolate_linear(const Grid& grid, std::span<const double> values, cplx z) {
  const int n = grid.size();
  const auto [u, v] = grid.locate(z);
  const int i0 = std::clamp(int(std::floor(u)), 0, n - 2);
  const int j0 = std::clamp(int(std::floor(v)), 0, n - 2);
  const double tu = std::clamp(u - i0, 0.0, 1.0);
  const double tv = std::clamp(v - j0, 0.0, 1.0);
  const double v00 = values[grid.index(i0, j0)];
  const double v10 = values[grid.index(i0 + 1, j0)];
  const double v01 = values[grid.index(i0, j0 + 1)];
  const double v11 = values[grid.index(i0 + 1, j0 + 1)];
  return (1 - tu) * (1 - tv) * v00 + tu * (1 - tv) * v10 + (1 - tu) * tv * v01 + tu * tv * v11;
}

}  // namespace pascali
