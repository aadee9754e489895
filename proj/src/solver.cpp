#include "pascali/solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "pascali/errors.hpp"
#include "pascali/geometry.hpp"

namespace pascali {

namespace {

double real_dot(const GridFunction& a, const GridFunction& b) {
  const auto x = a.values();
  const auto y = b.values();
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += x[k].real() * y[k].real() + x[k].imag() * y[k].imag();
  return s;
}

// y += alpha * x
void axpy(double alpha, const GridFunction& x, GridFunction& y) {
  const auto a = x.values();
  auto b = y.values();
  for (std::size_t k = 0; k < a.size(); ++k) b[k] += alpha * a[k];
}

void mask_in_place(GridFunction& w, const Mask& m) {
  for (std::size_t k = 0; k < w.grid().node_count(); ++k) {
    if (m[k]) continue;
    for (auto& v : w.node(k)) v = 0.0;
  }
}

double sup_all(const GridFunction& w) {
  double s = 0.0;
  for (std::size_t k = 0; k < w.grid().node_count(); ++k) s = std::max(s, w.norm_at(k));
  return s;
}

double sup_masked(const GridFunction& w, const Mask& m) {
  double s = 0.0;
  for (std::size_t k = 0; k < w.grid().node_count(); ++k)
    if (m[k]) s = std::max(s, w.norm_at(k));
  return s;
}

template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  const int workers = std::max(1, std::min<int>(threads, int(count)));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

PascaliSolver::PascaliSolver(CoefficientField coeff, CauchyGreenOperator cg, SolverOptions options)
    : coeff_(std::move(coeff)), cg_(std::move(cg)), options_(options) {
  if (!(coeff_.grid() == cg_.grid())) throw DimensionError("coefficients and Cauchy-Green operator use different grids");
  if (!(options_.tol > 0.0 && options_.tol < 1.0)) throw DomainError("solver tolerance must lie in (0, 1)");
  if (options_.max_iter < 1) throw DomainError("solver max_iter must be >= 1");
  if (!(options_.lambda >= 0.0)) throw DomainError("regularization must be >= 0");
}

GridFunction PascaliSolver::apply_P(const GridFunction& w) const {
  if (w.dim() != coeff_.dim()) throw DimensionError("apply_P: dimension mismatch");
  GridFunction out = w;
  if (coeff_.is_zero()) return out;
  out += cg_.apply(coeff_.zero_order(w));
  return out;
}

GridFunction PascaliSolver::solve_P(const GridFunction& phi, SolveStats* stats) const {
  if (!(phi.grid() == grid())) throw DimensionError("solve_P: right-hand side lives on a different grid");
  if (phi.dim() != coeff_.dim()) throw DimensionError("solve_P: dimension mismatch");
  if (!phi.all_finite()) throw NonFiniteError("solve_P: right-hand side is not finite", cplx(0.0, 0.0));
  SolveStats local;
  SolveStats& st = stats ? *stats : local;
  st = SolveStats{};
  if (coeff_.is_zero()) return phi;
  const double scale = sup_all(phi);
  if (scale == 0.0) return GridFunction(grid(), phi.dim());

  const Mask& D = domain();
  // Restricted operator on D: x -> x + [T(A x)]_D, with x zero off D.
  auto op = [&](const GridFunction& x) {
    GridFunction y = cg_.apply(coeff_.zero_order(x));
    mask_in_place(y, D);
    y += x;
    return y;
  };
  auto op_adjoint = [&](const GridFunction& y) {
    GridFunction x = coeff_.zero_order_adjoint(cg_.apply_adjoint(y));
    mask_in_place(x, D);
    x += y;
    return x;
  };

  GridFunction b = phi;
  mask_in_place(b, D);
  GridFunction x(grid(), phi.dim());
  const double lambda = options_.lambda;
  const double target = options_.tol * scale;
  int total = 0;
  double true_rel = std::numeric_limits<double>::infinity();
  GridFunction w(grid(), phi.dim());

  // CGLS with Tikhonov term, restarted from the current iterate whenever the
  // recursively updated residual drifts from the true one.
  while (total < options_.max_iter) {
    GridFunction r = b - op(x);
    GridFunction s = op_adjoint(r);
    axpy(-lambda, x, s);
    GridFunction p = s;
    double gamma = real_dot(s, s);
    while (total < options_.max_iter && sup_all(r) > 0.5 * target && gamma > 0.0) {
      const GridFunction q = op(p);
      const double delta = real_dot(q, q) + lambda * real_dot(p, p);
      if (!(delta > 0.0)) break;
      const double alpha = gamma / delta;
      axpy(alpha, p, x);
      axpy(-alpha, q, r);
      s = op_adjoint(r);
      axpy(-lambda, x, s);
      const double gamma_new = real_dot(s, s);
      const double beta = gamma_new / gamma;
      gamma = gamma_new;
      GridFunction next = s;
      axpy(beta, p, next);
      p = std::move(next);
      ++total;
    }
    // Values off D follow from the equation: w = phi - T(A x) there.
    GridFunction tx = cg_.apply(coeff_.zero_order(x));
    w = phi - tx;
    for (std::size_t k = 0; k < grid().node_count(); ++k) {
      if (!D[k]) continue;
      auto dst = w.node(k);
      const auto src = x.node(k);
      std::copy(src.begin(), src.end(), dst.begin());
    }
    GridFunction res = apply_P(w);
    res -= phi;
    true_rel = sup_all(res) / scale;
    if (true_rel <= options_.tol) break;
    if (gamma == 0.0) break;
  }
  st.iterations = total;
  st.relative_residual = true_rel;
  if (!(true_rel <= options_.tol)) {
    throw ConvergenceError("solve_P did not converge: relative residual " + std::to_string(true_rel) + " after " +
                               std::to_string(total) + " iterations",
                           total, true_rel);
  }
  return w;
}

GridFunction PascaliSolver::right_inverse_dbar(const GridFunction& g, SolveStats* stats) const {
  return solve_P(cg_.apply(g), stats);
}

CorrectionResult PascaliSolver::correct_to_solution(const GridFunction& g, const Mask& omega, double collar_cells) const {
  if (!(g.grid() == grid()) || !(omega.grid() == grid())) throw DimensionError("correct_to_solution: grid mismatch");
  if (g.dim() != coeff_.dim()) throw DimensionError("correct_to_solution: dimension mismatch");
  if (omega.empty()) throw DomainError("correct_to_solution: empty domain");
  if (!omega.dilated(11.0).subset_of(domain())) {
    throw DomainError("correct_to_solution: the domain must stay 11 cells inside the solve domain D");
  }
  GridFunction data = dbar_B(coeff_, g);
  mask_in_place(data, omega);
  if (!(collar_cells >= 0.0)) throw DomainError("correct_to_solution: collar must be >= 0");
  const GridFunction extended = collar_cells > 0.0 ? extend_smooth(data, omega, collar_cells) : data;
  CorrectionResult out{g, 0.0, 0.0, 0.0, {}};
  const GridFunction u = right_inverse_dbar(extended, &out.stats);
  out.w -= u;
  Mask inner = omega.eroded(2);
  if (inner.empty()) inner = omega;
  out.achieved_residual = sup_norm(dbar_B(coeff_, out.w), inner);
  const bool thick = !omega.eroded(1).empty();
  out.correction_size = thick ? c1_norm_proxy(u, omega) : sup_norm(u, omega);
  out.data_size = thick ? c1_norm_proxy(data, omega) : sup_norm(data, omega);
  return out;
}

FormalPowerBasis PascaliSolver::build_formal_powers(const Mask& U, int degree_max) const {
  if (degree_max < 0) throw DomainError("degree_max must be >= 0");
  if (!(U.grid() == grid())) throw DimensionError("build_formal_powers: grid mismatch");
  if (U.empty()) throw DomainError("build_formal_powers: empty domain");
  const int n = coeff_.dim();
  FormalPowerBasis basis{degree_max, cplx(0.0, 0.0), 0.0, U, {}, {}};
  cplx c(0.0, 0.0);
  const auto idx = U.indices();
  for (std::size_t k : idx) c += grid().node(k);
  c /= double(idx.size());
  double rho = 0.0;
  for (std::size_t k : idx) rho = std::max(rho, std::abs(grid().node(k) - c));
  rho = std::max(rho, grid().spacing());
  basis.center = c;
  basis.radius = rho;

  struct Seed {
    int k, j;
    cplx phase;
  };
  std::vector<Seed> seeds;
  for (int k = 0; k <= degree_max; ++k)
    for (int j = 0; j < n; ++j)
      for (cplx phase : {cplx(1.0, 0.0), cplx(0.0, 1.0)}) seeds.push_back({k, j, phase});

  Mask inner = U.eroded(2);
  if (inner.empty()) inner = U;
  basis.members.resize(seeds.size(), FormalPower{0, 0, cplx(1.0, 0.0), GridFunction(grid(), n), 0.0});
  parallel_for(seeds.size(), options_.threads, [&](std::size_t m) {
    const Seed& s = seeds[m];
    GridFunction seed = sample(grid(), n, [&](cplx z, std::span<cplx> out) {
      std::fill(out.begin(), out.end(), cplx(0.0, 0.0));
      out[std::size_t(s.j)] = s.phase * std::pow((z - c) / rho, s.k);
    });
    GridFunction w = coeff_.is_zero() ? seed : correct_to_solution(seed, U).w;
    const double norm = sup_norm(w, U);
    if (!(norm > 0.0)) throw Error("formal power vanishes on the generation domain");
    w *= cplx(1.0 / norm, 0.0);
    FormalPower& fp = basis.members[m];
    fp.degree = s.k;
    fp.unit = s.j;
    fp.phase = s.phase;
    fp.residual = sup_norm(dbar_B(coeff_, w), inner);
    fp.w = std::move(w);
  });

  // Near-duplicate members make the least-squares system rank deficient.
  for (std::size_t a = 0; a < basis.members.size(); ++a) {
    for (std::size_t b = a + 1; b < basis.members.size(); ++b) {
      const GridFunction d = basis.members[a].w - basis.members[b].w;
      if (sup_masked(d, U) < 1e-6) {
        basis.warnings.push_back("members " + std::to_string(a) + " and " + std::to_string(b) + " nearly coincide");
      }
    }
  }
  return basis;
}

namespace {

// Real least squares: minimize sum_p |sum_m c_m M[p][m] - y_p|^2 + lambda |c|^2
// over real c, with columns scaled to unit norm first.
std::vector<double> real_least_squares(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, double lambda,
                                       std::vector<std::string>& warnings) {
  const Eigen::Index cols = A.cols();
  Eigen::VectorXd scale(cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    const double nrm = A.col(c).norm();
    scale(c) = nrm > 0.0 ? 1.0 / nrm : 1.0;
  }
  const Eigen::MatrixXd As = A * scale.asDiagonal();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(As);
  qr.setThreshold(1e-12);
  if (qr.rank() < cols) {
    warnings.push_back("least-squares system is rank deficient (rank " + std::to_string(qr.rank()) + " of " +
                       std::to_string(cols) + "); regularized solution used");
  }
  Eigen::MatrixXd Aug(As.rows() + cols, cols);
  Aug.topRows(As.rows()) = As;
  Aug.bottomRows(cols) = std::sqrt(lambda) * Eigen::MatrixXd::Identity(cols, cols);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(As.rows() + cols);
  rhs.head(As.rows()) = y;
  const Eigen::VectorXd cs = Aug.householderQr().solve(rhs);
  std::vector<double> out(static_cast<std::size_t>(cols));
  for (Eigen::Index c = 0; c < cols; ++c) out[std::size_t(c)] = cs(c) * scale(c);
  return out;
}

GridFunction combine(const FormalPowerBasis& basis, const std::vector<double>& coef) {
  GridFunction w(basis.members.front().w.grid(), basis.members.front().w.dim());
  for (std::size_t m = 0; m < basis.members.size(); ++m) axpy(coef[m], basis.members[m].w, w);
  return w;
}

}  // namespace

RungeResult runge_approximate_points(const FormalPowerBasis& basis, const std::vector<cplx>& points,
                                     const std::vector<cplx>& values, double lambda) {
  if (basis.members.empty()) throw DomainError("runge_approximate: empty basis");
  const int n = basis.members.front().w.dim();
  if (values.size() != points.size() * std::size_t(n)) throw DimensionError("runge_approximate: n values per point");
  if (points.empty()) throw DomainError("runge_approximate: no target points");
  const std::size_t P = points.size();
  const Eigen::Index rows = Eigen::Index(P * std::size_t(n) * 2);
  const Eigen::Index cols = Eigen::Index(basis.members.size());
  Eigen::MatrixXd A(rows, cols);
  Eigen::VectorXd y(rows);
  std::vector<cplx> buf(static_cast<std::size_t>(n));
  for (Eigen::Index m = 0; m < cols; ++m) {
    const GridFunction& w = basis.members[std::size_t(m)].w;
    for (std::size_t p = 0; p < P; ++p) {
      interpolate(w, points[p], buf);
      for (int c = 0; c < n; ++c) {
        const Eigen::Index r = Eigen::Index((p * std::size_t(n) + std::size_t(c)) * 2);
        A(r, m) = buf[std::size_t(c)].real();
        A(r + 1, m) = buf[std::size_t(c)].imag();
      }
    }
  }
  for (std::size_t p = 0; p < P; ++p) {
    for (int c = 0; c < n; ++c) {
      const Eigen::Index r = Eigen::Index((p * std::size_t(n) + std::size_t(c)) * 2);
      y(r) = values[p * std::size_t(n) + std::size_t(c)].real();
      y(r + 1) = values[p * std::size_t(n) + std::size_t(c)].imag();
    }
  }
  RungeResult out{GridFunction(basis.members.front().w.grid(), n), 0.0, {}, basis.warnings};
  out.coefficients = real_least_squares(A, y, lambda, out.warnings);
  out.w = combine(basis, out.coefficients);
  Eigen::VectorXd c(cols);
  for (Eigen::Index m = 0; m < cols; ++m) c(m) = out.coefficients[std::size_t(m)];
  const Eigen::VectorXd fit = A * c - y;
  for (std::size_t p = 0; p < P; ++p) {
    double s = 0.0;
    for (int q = 0; q < 2 * n; ++q) s += fit(Eigen::Index(p * std::size_t(2 * n) + std::size_t(q))) *
                                           fit(Eigen::Index(p * std::size_t(2 * n) + std::size_t(q)));
    out.err = std::max(out.err, std::sqrt(s));
  }
  return out;
}

RungeResult runge_approximate(const FormalPowerBasis& basis, const GridFunction& f, const Mask& K, double lambda) {
  if (basis.members.empty()) throw DomainError("runge_approximate: empty basis");
  if (!(f.grid() == basis.members.front().w.grid()) || !(K.grid() == f.grid())) {
    throw DimensionError("runge_approximate: grid mismatch");
  }
  if (K.empty()) throw DomainError("runge_approximate: empty target mask");
  std::vector<cplx> points;
  std::vector<cplx> values;
  for (std::size_t k : K.indices()) {
    points.push_back(f.grid().node(k));
    for (const cplx& v : f.node(k)) values.push_back(v);
  }
  RungeResult out = runge_approximate_points(basis, points, values, lambda);
  out.err = sup_norm(f - out.w, K);
  return out;
}

SimilarityDiagnostic similarity_diagnostic(const PascaliSolver& solver, const GridFunction& w, const Mask& m) {
  const CoefficientField& coeff = solver.coeff();
  if (coeff.dim() != 1 || w.dim() != 1) throw DimensionError("similarity diagnostic needs a scalar system");
  if (!m.subset_of(solver.domain())) throw DomainError("similarity diagnostic mask must lie inside D");
  double min_abs = std::numeric_limits<double>::infinity();
  for (std::size_t k : m.indices()) min_abs = std::min(min_abs, std::abs(w.values()[k]));
  if (!(min_abs > 0.1)) throw DomainError("similarity diagnostic needs min |w| > 0.1 on the mask");
  const Grid& g = w.grid();
  GridFunction density(g, 1);
  for (std::size_t k : m.indices()) {
    const cplx wk = w.values()[k];
    density.values()[k] = coeff.b1_at(k)[0] + coeff.b2_at(k)[0] * std::conj(wk) / wk;
  }
  SimilarityDiagnostic out{solver.cg().apply(density), GridFunction(g, 1), 0.0, min_abs};
  for (std::size_t k = 0; k < g.node_count(); ++k) out.h.values()[k] = w.values()[k] * std::exp(out.s.values()[k]);
  Mask inner = m.eroded(2);
  if (inner.empty()) inner = m;
  out.residual = sup_norm(dbar_fd(out.h), inner);
  return out;
}

}  // namespace pascali
