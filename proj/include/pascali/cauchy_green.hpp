#pragma once

#include <memory>

#include "pascali/grid.hpp"

namespace pascali {

/// Discrete Cauchy-Green transform of densities supported on a masked domain D:
///
///   (T g)(z) = (h^2 / pi) * sum_{zeta in D} g(zeta) / (z - zeta),
///
/// evaluated at every node of the grid. The self term is dropped. The sum is
/// computed as an aperiodic convolution on the zero-padded 2N x 2N grid.
class CauchyGreenOperator {
 public:
  CauchyGreenOperator(const Grid& grid, const Mask& domain);

  const Grid& grid() const;
  const Mask& domain() const;

  /// Applies T to g masked to the domain; componentwise for dim > 1.
  GridFunction apply(const GridFunction& g) const;
  /// Adjoint of apply for the inner product sum conj(a) b over all nodes;
  /// the result vanishes outside the domain.
  GridFunction apply_adjoint(const GridFunction& v) const;

  /// Sampled kernel h^2 / (pi * (p + i q) h) for the node offset (p, q).
  cplx kernel(int p, int q) const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

/// sup |dbar_fd(T g) - g| over the domain eroded by two cells.
double cg_residual(const CauchyGreenOperator& op, const GridFunction& g);

}  // namespace pascali
