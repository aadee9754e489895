#include "pascali/operator.hpp"

#include <cmath>

#include "pascali/errors.hpp"

namespace pascali {

namespace {

// Expands an expression value into a row-major n x n matrix.
void to_matrix(const expr::Value& v, int n, std::span<cplx> out, const char* name) {
  if (v.is_scalar()) {
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) out[std::size_t(r * n + c)] = r == c ? v.data[0] : cplx(0.0, 0.0);
    return;
  }
  if (v.rows != n || v.cols != n) {
    throw DimensionError(std::string(name) + " must be a scalar or a " + std::to_string(n) + "x" + std::to_string(n) +
                         " matrix, got " + std::to_string(v.rows) + "x" + std::to_string(v.cols));
  }
  std::copy(v.data.begin(), v.data.end(), out.begin());
}

void check_shape(const expr::Expr& e, int n, const char* name) {
  if (e.is_scalar()) return;
  if (e.rows() != n || e.cols() != n) {
    throw DimensionError(std::string(name) + " must be a scalar or a " + std::to_string(n) + "x" + std::to_string(n) +
                         " matrix, got " + std::to_string(e.rows()) + "x" + std::to_string(e.cols()));
  }
}

std::shared_ptr<const std::vector<cplx>> sample_matrix(const expr::Expr& e, int n, const Grid& grid, const char* name) {
  const std::size_t nn = std::size_t(n) * std::size_t(n);
  auto cache = std::make_shared<std::vector<cplx>>(grid.node_count() * nn);
  for (std::size_t k = 0; k < grid.node_count(); ++k) {
    to_matrix(e.eval(grid.node(k)), n, std::span<cplx>(cache->data() + k * nn, nn), name);
  }
  return cache;
}

void require_dim(const CoefficientField& coeff, const GridFunction& w) {
  if (!(w.grid() == coeff.grid())) throw DimensionError("grid function and coefficients live on different grids");
  if (w.dim() != coeff.dim()) {
    throw DimensionError("dimension mismatch: coefficients are " + std::to_string(coeff.dim()) +
                         "-dimensional, grid function has dim " + std::to_string(w.dim()));
  }
}

// out[r] += sum_c M[r, c] x[c], with M optionally transposed and/or conjugated.
void matvec_add(std::span<const cplx> m, std::span<const cplx> x, std::span<cplx> out, int n, bool transpose,
                bool conj_matrix, bool conj_x, double sign) {
  for (int r = 0; r < n; ++r) {
    cplx acc(0.0, 0.0);
    for (int c = 0; c < n; ++c) {
      cplx a = transpose ? m[std::size_t(c * n + r)] : m[std::size_t(r * n + c)];
      if (conj_matrix) a = std::conj(a);
      const cplx b = conj_x ? std::conj(x[std::size_t(c)]) : x[std::size_t(c)];
      acc += a * b;
    }
    out[std::size_t(r)] += sign * acc;
  }
}

}  // namespace

CoefficientField::CoefficientField(int n, expr::Expr b1, expr::Expr b2, const Grid& grid)
    : n_(n), grid_(grid), b1_(std::move(b1)), b2_(std::move(b2)) {
  if (n < 1) throw DimensionError("system dimension must be >= 1");
  check_shape(b1_, n, "B1");
  check_shape(b2_, n, "B2");
  b1_zero_ = b1_.is_zero();
  b2_zero_ = b2_.is_zero();
  b1_cache_ = sample_matrix(b1_, n, grid_, "B1");
  b2_cache_ = sample_matrix(b2_, n, grid_, "B2");
}

CoefficientField CoefficientField::from_text(int n, std::string_view b1, std::string_view b2, const Grid& grid) {
  return CoefficientField(n, expr::Expr::parse(b1), expr::Expr::parse(b2), grid);
}

CoefficientField CoefficientField::zero(int n, const Grid& grid) { return from_text(n, "0", "0", grid); }

CoefficientField CoefficientField::on_grid(const Grid& grid) const {
  if (grid == grid_) return *this;
  return CoefficientField(n_, b1_, b2_, grid);
}

std::span<const cplx> CoefficientField::b1_at(std::size_t k) const {
  const std::size_t nn = std::size_t(n_) * std::size_t(n_);
  return {b1_cache_->data() + k * nn, nn};
}

std::span<const cplx> CoefficientField::b2_at(std::size_t k) const {
  const std::size_t nn = std::size_t(n_) * std::size_t(n_);
  return {b2_cache_->data() + k * nn, nn};
}

void CoefficientField::eval_at(cplx z, std::span<cplx> b1, std::span<cplx> b2) const {
  to_matrix(b1_.eval(z), n_, b1, "B1");
  to_matrix(b2_.eval(z), n_, b2, "B2");
}

double CoefficientField::verify_cache() const {
  const std::size_t nn = std::size_t(n_) * std::size_t(n_);
  std::vector<cplx> m1(nn), m2(nn);
  double worst = 0.0;
  for (std::size_t k = 0; k < grid_.node_count(); ++k) {
    eval_at(grid_.node(k), m1, m2);
    const auto c1 = b1_at(k);
    const auto c2 = b2_at(k);
    for (std::size_t e = 0; e < nn; ++e) {
      worst = std::max(worst, std::abs(m1[e] - c1[e]));
      worst = std::max(worst, std::abs(m2[e] - c2[e]));
    }
  }
  return worst;
}

GridFunction CoefficientField::zero_order(const GridFunction& w) const {
  require_dim(*this, w);
  GridFunction out(grid_, n_);
  if (is_zero()) return out;
  for (std::size_t k = 0; k < grid_.node_count(); ++k) {
    auto o = out.node(k);
    const auto x = w.node(k);
    if (!b1_zero_) matvec_add(b1_at(k), x, o, n_, false, false, false, 1.0);
    if (!b2_zero_) matvec_add(b2_at(k), x, o, n_, false, false, true, 1.0);
  }
  return out;
}

GridFunction CoefficientField::zero_order_adjoint(const GridFunction& v) const {
  require_dim(*this, v);
  GridFunction out(grid_, n_);
  if (is_zero()) return out;
  for (std::size_t k = 0; k < grid_.node_count(); ++k) {
    auto o = out.node(k);
    const auto x = v.node(k);
    if (!b1_zero_) matvec_add(b1_at(k), x, o, n_, true, true, false, 1.0);
    if (!b2_zero_) matvec_add(b2_at(k), x, o, n_, true, false, true, 1.0);
  }
  return out;
}

GridFunction dbar_B(const CoefficientField& coeff, const GridFunction& w) {
  require_dim(coeff, w);
  GridFunction out = dbar_fd(w);
  if (!coeff.is_zero()) out += coeff.zero_order(w);
  return out;
}

GridFunction dbar_B_adjoint(const CoefficientField& coeff, const GridFunction& phi) {
  require_dim(coeff, phi);
  GridFunction out = dbar_fd(phi);
  const int n = coeff.dim();
  for (std::size_t k = 0; k < coeff.grid().node_count(); ++k) {
    auto o = out.node(k);
    const auto x = phi.node(k);
    if (!coeff.b1_zero()) matvec_add(coeff.b1_at(k), x, o, n, true, false, false, -1.0);
    if (!coeff.b2_zero()) matvec_add(coeff.b2_at(k), x, o, n, true, true, true, -1.0);
  }
  return out;
}

namespace {

void require_collar_free(const GridFunction& phi, int collar) {
  const Grid& g = phi.grid();
  const int n = g.size();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i >= collar && i < n - collar && j >= collar && j < n - collar) continue;
      if (phi.norm_at(g.index(i, j)) != 0.0) {
        const cplx z = g.node(i, j);
        throw DomainError("test function must vanish on the " + std::to_string(collar) +
                          "-cell collar; nonzero at (" + std::to_string(z.real()) + ", " + std::to_string(z.imag()) +
                          ")");
      }
    }
  }
}

cplx transpose_dot(std::span<const cplx> a, std::span<const cplx> b) {
  cplx s(0.0, 0.0);
  for (std::size_t c = 0; c < a.size(); ++c) s += a[c] * b[c];
  return s;
}

}  // namespace

cplx bilinear_pairing(const CoefficientField& coeff, const GridFunction& w, const GridFunction& phi) {
  require_dim(coeff, w);
  require_dim(coeff, phi);
  require_collar_free(phi, 4);
  const GridFunction a = dbar_B(coeff, w);
  const GridFunction b = dbar_B_adjoint(coeff, phi);
  cplx sum(0.0, 0.0);
  for (std::size_t k = 0; k < coeff.grid().node_count(); ++k) {
    sum += transpose_dot(phi.node(k), a.node(k)) + transpose_dot(w.node(k), b.node(k));
  }
  const double h = coeff.grid().spacing();
  return h * h * sum;
}

cplx pairing_coupling_term(const CoefficientField& coeff, const GridFunction& w, const GridFunction& phi) {
  require_dim(coeff, w);
  require_dim(coeff, phi);
  const int n = coeff.dim();
  cplx sum(0.0, 0.0);
  std::vector<cplx> t(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < coeff.grid().node_count(); ++k) {
    std::fill(t.begin(), t.end(), cplx(0.0, 0.0));
    matvec_add(coeff.b2_at(k), w.node(k), t, n, false, false, true, 1.0);
    const cplx s = transpose_dot(phi.node(k), t);
    sum += s - std::conj(s);
  }
  const double h = coeff.grid().spacing();
  return h * h * sum;
}

PascaliResidual pascali_residual(const CoefficientField& coeff, const GridFunction& w, const Mask& m) {
  PascaliResidual r{dbar_B(coeff, w), 0.0, 0.0};
  r.sup = sup_norm(r.value, m);
  r.c1 = m.eroded(1).empty() ? r.sup : c1_norm_proxy(r.value, m);
  return r;
}

}  // namespace pascali
