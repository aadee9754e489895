#pragma once

#include <string>
#include <vector>

#include "pascali/cauchy_green.hpp"
#include "pascali/operator.hpp"

namespace pascali {

struct SolverOptions {
  double tol = 1e-8;        // relative sup-norm residual target of solve_P
  int max_iter = 500;
  double lambda = 1e-10;    // Tikhonov weight on the normal equations
  int threads = 1;          // workers for independent solves (basis generation)
};

struct SolveStats {
  int iterations = 0;
  double relative_residual = 0.0;
};

struct CorrectionResult {
  GridFunction w;
  double achieved_residual = 0.0;  // sup |dbar_B w| on Omega eroded by two cells
  double correction_size = 0.0;    // C1 proxy of g - w on Omega
  double data_size = 0.0;          // C1 proxy of dbar_B g on Omega
  SolveStats stats;
};

/// One generated global solution of the system, normalized to sup 1 on the
/// generation domain.
struct FormalPower {
  int degree = 0;
  int unit = 0;       // index j of the unit vector e_j
  cplx phase{1.0, 0.0};
  GridFunction w;
  double residual = 0.0;  // sup |dbar_B w| on the generation domain eroded by two cells
};

struct FormalPowerBasis {
  int degree_max = 0;
  cplx center;    // expansion point of the seed monomials
  double radius;  // seeds are phase * ((z - center) / radius)^k * e_j
  Mask domain;
  std::vector<FormalPower> members;
  std::vector<std::string> warnings;
};

struct RungeResult {
  GridFunction w;
  double err = 0.0;  // sup |f - w| over the target
  std::vector<double> coefficients;  // real weights of the members
  std::vector<std::string> warnings;
};

struct SimilarityDiagnostic {
  GridFunction s;  // T(B1 + B2 conj(w)/w) over the mask
  GridFunction h;  // w * exp(s), holomorphic on the mask
  double residual = 0.0;  // sup |dbar_fd h| on the mask eroded by two cells
  double min_abs_w = 0.0;
};

/// Integral-equation machinery for the Pascali system on the domain D of the
/// Cauchy-Green operator:
///   P(w) = w + T_D(B1 w + B2 conj(w)).
class PascaliSolver {
 public:
  PascaliSolver(CoefficientField coeff, CauchyGreenOperator cg, SolverOptions options = {});

  const CoefficientField& coeff() const { return coeff_; }
  const CauchyGreenOperator& cg() const { return cg_; }
  const SolverOptions& options() const { return options_; }
  const Grid& grid() const { return cg_.grid(); }
  const Mask& domain() const { return cg_.domain(); }

  GridFunction apply_P(const GridFunction& w) const;

  /// Solves P(w) = phi with sup |P(w) - phi| <= tol * sup |phi|. The system is
  /// solved for the values on D by CGLS on the realified unknowns; values off
  /// D follow from the equation itself. Throws ConvergenceError.
  GridFunction solve_P(const GridFunction& phi, SolveStats* stats = nullptr) const;

  /// u = P^{-1}(T_D g), so that dbar_B u = g on D.
  GridFunction right_inverse_dbar(const GridFunction& g, SolveStats* stats = nullptr) const;

  /// w = g - u where u right-inverts the smooth extension of dbar_B(g)|_Omega.
  /// Omega must stay 11 cells away from the complement of D. The residual is
  /// extended across a collar of `collar_cells` around Omega (0: no collar).
  CorrectionResult correct_to_solution(const GridFunction& g, const Mask& omega, double collar_cells = 10.0) const;

  /// Corrected monomials phase * ((z - c) / rho)^k * e_j for k <= degree_max,
  /// j < n and phase in {1, i}; c is the centroid of U and rho the largest
  /// distance from c to U.
  FormalPowerBasis build_formal_powers(const Mask& U, int degree_max) const;

 private:
  CoefficientField coeff_;
  CauchyGreenOperator cg_;
  SolverOptions options_;
};

/// Real least-squares combination of basis members fitted to f on the mask K.
RungeResult runge_approximate(const FormalPowerBasis& basis, const GridFunction& f, const Mask& K,
                              double lambda = 1e-12);

/// Same fit against point samples (values hold n entries per point); members
/// are interpolated to the points. err is measured at the points.
RungeResult runge_approximate_points(const FormalPowerBasis& basis, const std::vector<cplx>& points,
                                     const std::vector<cplx>& values, double lambda = 1e-12);

/// Scalar similarity check: with s = T(B1 + B2 conj(w)/w) over the mask,
/// h = w e^s satisfies dbar h = 0 there. Requires n = 1 and min |w| > 0.1.
SimilarityDiagnostic similarity_diagnostic(const PascaliSolver& solver, const GridFunction& w, const Mask& m);

}  // namespace pascali
