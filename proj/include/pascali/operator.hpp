#pragma once

#include <memory>
#include <span>
#include <string_view>

#include "pascali/expr.hpp"
#include "pascali/grid.hpp"

namespace pascali {

/// The coefficient pair (B1, B2) of the Pascali system
///   w_zbar + B1 w + B2 conj(w) = 0
/// as n x n matrix expressions, with samples cached on one grid.
/// A scalar expression stands for that scalar times the identity.
class CoefficientField {
 public:
  CoefficientField(int n, expr::Expr b1, expr::Expr b2, const Grid& grid);

  static CoefficientField from_text(int n, std::string_view b1, std::string_view b2, const Grid& grid);
  static CoefficientField zero(int n, const Grid& grid);

  int dim() const { return n_; }
  const Grid& grid() const { return grid_; }
  const expr::Expr& b1_expr() const { return b1_; }
  const expr::Expr& b2_expr() const { return b2_; }
  bool b1_zero() const { return b1_zero_; }
  bool b2_zero() const { return b2_zero_; }
  bool is_zero() const { return b1_zero_ && b2_zero_; }

  /// Same expressions sampled on another grid.
  CoefficientField on_grid(const Grid& grid) const;

  /// Cached row-major n x n matrices at node k.
  std::span<const cplx> b1_at(std::size_t k) const;
  std::span<const cplx> b2_at(std::size_t k) const;

  /// Evaluates the expressions at an arbitrary point (row-major n x n each).
  void eval_at(cplx z, std::span<cplx> b1, std::span<cplx> b2) const;

  /// Largest discrepancy between the cache and fresh expression evaluation.
  double verify_cache() const;

  /// B1 w + B2 conj(w), pointwise.
  GridFunction zero_order(const GridFunction& w) const;
  /// Adjoint of zero_order for Re sum conj(a) b: B1^H v + B2^T conj(v).
  GridFunction zero_order_adjoint(const GridFunction& v) const;

 private:
  int n_;
  Grid grid_;
  expr::Expr b1_;
  expr::Expr b2_;
  bool b1_zero_;
  bool b2_zero_;
  std::shared_ptr<const std::vector<cplx>> b1_cache_;
  std::shared_ptr<const std::vector<cplx>> b2_cache_;
};

/// dbar_fd(w) + B1 w + B2 conj(w)
GridFunction dbar_B(const CoefficientField& coeff, const GridFunction& w);

/// dbar_fd(phi) - B1^T phi - conj(B2)^T conj(phi)
GridFunction dbar_B_adjoint(const CoefficientField& coeff, const GridFunction& phi);

/// h^2 * sum over nodes of phi^T dbar_B(w) + w^T dbar_B_adjoint(phi).
/// phi must vanish on the four-cell collar along the box edges.
cplx bilinear_pairing(const CoefficientField& coeff, const GridFunction& w, const GridFunction& phi);

/// h^2 * sum over nodes of phi^T B2 conj(w) - conj(phi)^T conj(B2) w,
/// the purely imaginary value the pairing reduces to.
cplx pairing_coupling_term(const CoefficientField& coeff, const GridFunction& w, const GridFunction& phi);

struct PascaliResidual {
  GridFunction value;
  double sup = 0.0;
  double c1 = 0.0;
};

/// The residual field dbar_B(w) with its sup and C1-proxy norms on a mask.
PascaliResidual pascali_residual(const CoefficientField& coeff, const GridFunction& w, const Mask& m);

}  // namespace pascali
