#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pascali/expr.hpp"
#include "pascali/geometry.hpp"
#include "pascali/solver.hpp"

namespace pascali {

struct StageRecord {
  std::string stage;
  double budget = 0.0;  // allowed error; 0 for stages without an error budget
  double error = 0.0;   // measured
  bool chain = false;   // part of the triangle-inequality chain bounding the final error
  std::string detail;
};

struct ApproximationReport {
  std::string target;
  double error = 0.0;     // sup |f - w| over the target samples
  double residual = 0.0;  // sup |dbar_B w| over residual_domain
  double residual_scale = 1.0;  // max(1, sup |w|) over the same domain
  std::string residual_domain;
  std::vector<StageRecord> stages;
  int iterations = 0;  // CGLS iterations over all solves
  std::vector<std::string> warnings;

  /// Sum of the measured errors of the chain stages; bounds `error` up to
  /// interpolation noise.
  double chain_sum() const;
};

struct LocalMergelyanResult {
  Mask U;            // neighbourhood of K on which w solves the system
  GridFunction w;
  double error = 0.0;  // sup |f - w| on K
  int offset = 0;      // cells between K and the edge of U
  int iterations = 0;
};

/// Corrects f on dilations K + offset for offset = start, start/2, ... down
/// to `floor` cells and returns the first with sup |f - w| <= eps / 2 on K.
/// f is read on the dilation itself, so it must be given (and close to a
/// solution) on a neighbourhood of K. Throws StageError("local", best, ...).
LocalMergelyanResult local_mergelyan(const PascaliSolver& solver, const Mask& K, const GridFunction& f, double eps,
                                     int start_offset = 16, int floor_offset = 2, double collar_cells = 10.0);

/// Solver for the same coefficients whose domain is omega plus a 12-cell
/// margin inside the domain of `solver`.
PascaliSolver solver_near(const PascaliSolver& solver, const Mask& omega);

/// Values of f at the samples of one arc: n entries per sample.
struct ArcData {
  ArcSamples samples;
  std::vector<cplx> values;
};

/// Samples every arc of S at h / 8 and evaluates fn there.
std::vector<ArcData> sample_arc_targets(const AdmissibleSet& S, int dim, const PointFunction& fn);

struct MergelyanOptions {
  int start_offset = 16;
  int degree = 12;
  double lambda = 1e-12;
  double glue_tol = 2e-2;        // scale-relative bound on dbar_B(H) at S nodes
  double correction_collar = 0;  // residual collar of the shrinking correction
  const FormalPowerBasis* basis = nullptr;  // generated on demand when null
};

struct MergelyanResult {
  GridFunction w;
  Mask domain;  // generation domain of the basis: w solves the system there
  ApproximationReport report;
};

/// Approximates f (f_dom on the domains of S, f_arcs on its arcs) uniformly
/// on S by a combination of formal powers. Stage budgets split eps as the
/// local step eps/4, the neighbourhood step eps/2, then correction and
/// Runge fit share what the measured upstream errors leave, each getting at
/// least eps/4. Throws StageError on a missed budget.
MergelyanResult mergelyan(const PascaliSolver& solver, const AdmissibleSet& S, const GridFunction& f_dom,
                          const std::vector<ArcData>& f_arcs, double eps, const MergelyanOptions& options = {});

/// Exhaustion used along the real line.
struct CarlemanSchedule {
  int m_max = 0;
  std::vector<double> eps;  // eps[m] = min of eps over grid nodes and line samples with |z| <= m + 2

  static CarlemanSchedule build(const Grid& grid, const expr::Expr& eps_expr, int m_max,
                                const std::vector<double>& line_t);

  /// S_m = {|z| <= m} together with the segment [-m-2, m+2].
  AdmissibleSet S(const Grid& grid, int m) const;
  /// Omega_m = {|z| < m + 1/3}.
  static Mask omega(const Grid& grid, int m);
  /// 1 on |z| <= m + 1/3, 0 on |z| >= m + 2/3.
  static double cutoff(int m, cplx z);
};

struct CarlemanStage {
  int m = 0;
  double eps_prev = 0.0;  // eps_{m-1}
  double bound = 0.0;     // eps_{m-1} / 2^{m+1}
  double step = 0.0;      // sup over S_{m-1} samples of |f_m - f_{m-1}|
  double tail = 0.0;      // eps_m / 2^{m+1}: bound on the next increment
  ApproximationReport mergelyan;
};

struct CarlemanOptions {
  int degree = 20;
  MergelyanOptions mergelyan;
};

struct CarlemanResult {
  GridFunction w;  // f_{m_max}, a solution on Omega_{m_max}
  Mask domain;
  CarlemanSchedule schedule;
  std::vector<CarlemanStage> stages;
  std::vector<double> line_t;     // real samples with |t| <= m_max
  std::vector<double> line_error; // |w(t) - f(t)|
  std::vector<double> line_eps;   // eps(t)
  bool final_check = false;
  ApproximationReport report;
};

using LineFunction = std::function<void(double t, std::span<cplx> out)>;

/// Carleman-type approximation of f along the real line with pointwise
/// budget eps(t), windowed at m_max.
CarlemanResult carleman(const PascaliSolver& solver, const LineFunction& f, const expr::Expr& eps_expr, int m_max,
                        const CarlemanOptions& options = {});

}  // namespace pascali
