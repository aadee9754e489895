#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "pascali/errors.hpp"
#include "pascali/solver.hpp"

using namespace pascali;

namespace {

PascaliSolver make_solver(const Grid& g, double radius, int n, const char* b1, const char* b2,
                          SolverOptions opt = {}) {
  return PascaliSolver(CoefficientField::from_text(n, b1, b2, g), CauchyGreenOperator(g, Mask::disk(g, g.center(), radius)),
                       opt);
}

GridFunction exp2x(const Grid& g) {
  return sample_scalar(g, [](cplx z) { return std::exp(2.0 * z.real()); });
}

}  // namespace

TEST_CASE("solve_P recovers a manufactured solution") {
  Grid g(0.0, 1.0, 64);
  SolverOptions opt;
  opt.tol = 1e-11;
  opt.lambda = 0.0;
  for (auto [b1, b2] : {std::pair{"0", "-1"}, {"0.3+0.2*i*z", "conj(z)"}}) {
    const PascaliSolver s = make_solver(g, 0.9, 1, b1, b2, opt);
    const GridFunction w0 = sample_scalar(g, [](cplx z) { return std::sin(z) + 0.5 * std::conj(z) * z; });
    SolveStats st;
    const GridFunction w = s.solve_P(s.apply_P(w0), &st);
    CHECK(sup_norm(w - w0, Mask(g, true)) <= 1e-6);
    CHECK(st.relative_residual <= 1e-11);
    CHECK(st.iterations > 0);
  }
}

TEST_CASE("solve_P is the identity for B = 0 and maps zero to zero") {
  Grid g(0.0, 1.0, 32);
  const PascaliSolver zero = make_solver(g, 0.9, 2, "0", "0");
  const GridFunction phi = sample(g, 2, [](cplx z, std::span<cplx> out) {
    out[0] = z;
    out[1] = std::exp(z);
  });
  CHECK(sup_norm(zero.solve_P(phi) - phi, Mask(g, true)) == 0.0);

  const PascaliSolver s = make_solver(g, 0.9, 1, "1", "-1");
  SolveStats st;
  CHECK(sup_norm(s.solve_P(GridFunction(g, 1), &st), Mask(g, true)) == 0.0);
  CHECK(st.iterations == 0);
}

TEST_CASE("right inverse for B = 0 is the Cauchy-Green transform") {
  Grid g(0.0, 1.25, 256);
  const PascaliSolver s = make_solver(g, 1.0, 1, "0", "0");
  GridFunction one(g, 1);
  for (auto& v : one.values()) v = 1.0;
  const GridFunction u = s.right_inverse_dbar(one);
  CHECK(std::abs(interpolate_scalar(u, cplx(0.3, 0.4)) - cplx(0.3, -0.4)) < 2e-2);
}

TEST_CASE("right inverse residual for a Vekua system") {
  Grid g(0.0, 1.0, 128);
  const PascaliSolver s = make_solver(g, 0.9, 1, "0", "-1");
  const GridFunction rhs = sample_scalar(g, [](cplx z) { return std::exp(2.0 * z.real()) + z; });
  const GridFunction u = s.right_inverse_dbar(rhs);
  const Mask in = s.domain().eroded(2);
  CHECK(sup_norm(dbar_B(s.coeff(), u) - rhs, in) <= 2e-2 * sup_norm(rhs, in));
}

TEST_CASE("correction leaves an exact solution alone") {
  Grid g(0.0, 1.0, 128);
  const PascaliSolver s = make_solver(g, 0.95, 1, "0", "-1");
  const GridFunction e = exp2x(g);
  const Mask omega = Mask::disk(g, 0.0, 0.5);
  const CorrectionResult r = s.correct_to_solution(e, omega);
  CHECK(sup_norm(r.w - e, omega) <= 1e-2);
  CHECK(r.achieved_residual <= 1e-2);
}

TEST_CASE("correction for B = 0 removes the antiholomorphic part") {
  Grid g(0.0, 1.0, 128);
  const PascaliSolver s = make_solver(g, 0.95, 1, "0", "0");
  const GridFunction gz = sample_scalar(g, [](cplx z) { return z * z + 0.01 * std::conj(z); });
  const GridFunction z2 = sample_scalar(g, [](cplx z) { return z * z; });
  const Mask omega = Mask::disk(g, 0.0, 0.5);
  const CorrectionResult r = s.correct_to_solution(gz, omega);
  CHECK(sup_norm(r.w - gz, omega) <= 0.05);
  // T applied to the constant 0.01 reproduces 0.01 conj(z) up to discretization error
  CHECK(sup_norm(r.w - z2, omega.eroded(2)) <= 2e-3);
  CHECK(r.achieved_residual <= 1e-3);
  CHECK(r.correction_size == doctest::Approx(0.025).epsilon(0.05));  // 0.01 conj(z): sup 0.005, each partial 0.01
}

TEST_CASE("correction domain must keep its distance from the solve domain edge") {
  Grid g(0.0, 1.0, 64);
  const PascaliSolver s = make_solver(g, 0.9, 1, "0", "-1");
  CHECK_THROWS_AS(s.correct_to_solution(exp2x(g), Mask::disk(g, 0.0, 0.85)), DomainError);
  CHECK_THROWS_AS(s.correct_to_solution(exp2x(g), Mask(g)), DomainError);
}

TEST_CASE("formal powers for B = 0 are scaled monomials") {
  Grid g(0.0, 1.0, 64);
  const PascaliSolver s = make_solver(g, 0.9, 2, "0", "0");
  const Mask U = Mask::disk(g, 0.0, 0.5);
  const FormalPowerBasis b = s.build_formal_powers(U, 2);
  CHECK(b.members.size() == 2u * 2u * 3u);
  for (const FormalPower& fp : b.members) {
    const GridFunction mono = sample(g, 2, [&](cplx z, std::span<cplx> out) {
      out[0] = out[1] = 0.0;
      out[std::size_t(fp.unit)] = fp.phase * std::pow((z - b.center) / b.radius, fp.degree);
    });
    const double nrm = sup_norm(mono, U);
    CHECK(sup_norm(fp.w - cplx(1.0 / nrm) * mono, Mask(g, true)) < 1e-12);
    CHECK(sup_norm(fp.w, U) == doctest::Approx(1.0));
    CHECK(fp.residual < 1e-10);
  }
}

TEST_CASE("formal powers for a Vekua system are corrected solutions") {
  Grid g(0.0, 1.0, 64);
  const PascaliSolver s = make_solver(g, 0.95, 1, "0", "-1");
  const Mask U = Mask::disk(g, 0.0, 0.5);
  const FormalPowerBasis b = s.build_formal_powers(U, 1);
  CHECK(b.members.size() == 4u);
  const FormalPower& c0 = b.members.front();
  CHECK(c0.degree == 0);
  CHECK(c0.phase == cplx(1.0, 0.0));
  // 1 is not a solution, so its correction varies over U
  double lo = 1e300, hi = 0.0;
  for (std::size_t k : U.indices()) {
    lo = std::min(lo, std::abs(c0.w.values()[k]));
    hi = std::max(hi, std::abs(c0.w.values()[k]));
  }
  CHECK(hi - lo > 0.1);
  for (const FormalPower& fp : b.members) {
    const double again = sup_norm(dbar_B(s.coeff(), fp.w), U.eroded(2));
    CHECK(again <= fp.residual + 1e-12);
    CHECK(fp.residual <= 5e-2);
  }
}

TEST_CASE("Runge fit reproduces a basis member exactly") {
  Grid g(0.0, 1.0, 64);
  const PascaliSolver s = make_solver(g, 0.95, 1, "0", "-1");
  const Mask U = Mask::disk(g, 0.0, 0.5);
  const FormalPowerBasis b = s.build_formal_powers(U, 2);
  const GridFunction target = b.members[3].w;
  const RungeResult r = runge_approximate(b, target, U);
  CHECK(r.err <= 1e-10);
  CHECK(r.coefficients.size() == b.members.size());
}

TEST_CASE("classical Runge approximation of 1/(z-2)") {
  Grid g(0.0, 1.5, 128);
  const PascaliSolver s = make_solver(g, 1.4, 1, "0", "0");
  const Mask K = Mask::disk(g, 0.0, 1.0);
  const GridFunction f = sample_scalar(g, [](cplx z) { return 1.0 / (z - 2.0); });
  const FormalPowerBasis b = s.build_formal_powers(K, 10);
  const RungeResult r = runge_approximate(b, f, K);
  CHECK(r.err <= 6e-4);

  // independent complex polynomial least squares on the same nodes
  const auto idx = K.indices();
  Eigen::MatrixXcd A(Eigen::Index(idx.size()), 11);
  Eigen::VectorXcd y(Eigen::Index(idx.size()));
  for (std::size_t p = 0; p < idx.size(); ++p) {
    const cplx z = (g.node(idx[p]) - b.center) / b.radius;
    for (int k = 0; k <= 10; ++k) A(Eigen::Index(p), k) = std::pow(z, k);
    y(Eigen::Index(p)) = f.values()[idx[p]];
  }
  const Eigen::VectorXcd c = A.colPivHouseholderQr().solve(y);
  const Eigen::VectorXcd fit = A * c;
  double diff = 0.0;
  for (std::size_t p = 0; p < idx.size(); ++p)
    diff = std::max(diff, std::abs(fit(Eigen::Index(p)) - r.w.values()[idx[p]]));
  CHECK(diff <= 1e-8);
}

TEST_CASE("Runge error does not grow with the degree") {
  Grid g(0.0, 1.5, 64);
  const PascaliSolver s = make_solver(g, 1.4, 1, "0", "0");
  const Mask K = Mask::disk(g, 0.0, 1.0);
  const GridFunction f = sample_scalar(g, [](cplx z) { return std::exp(z) / (z - 2.0); });
  double prev = 1e300;
  for (int d = 0; d <= 12; d += 2) {
    const double e = runge_approximate(s.build_formal_powers(K, d), f, K).err;
    CHECK(e <= prev + 1e-6);
    prev = e;
  }
}

TEST_CASE("point-sample Runge fit") {
  Grid g(0.0, 1.5, 64);
  const PascaliSolver s = make_solver(g, 1.4, 1, "0", "0");
  const FormalPowerBasis b = s.build_formal_powers(Mask::disk(g, 0.0, 1.0), 3);
  std::vector<cplx> pts, vals;
  for (int k = 0; k < 20; ++k) {
    const cplx z(-0.8 + 0.08 * k, 0.05 * k - 0.5);
    pts.push_back(z);
    vals.push_back(cplx(2.0, -1.0) * z * z * z - z);
  }
  // cubic interpolation reproduces the cubic between nodes
  CHECK(runge_approximate_points(b, pts, vals).err <= 1e-9);
  CHECK_THROWS_AS(runge_approximate_points(b, pts, {1.0}), DimensionError);
  CHECK_THROWS_AS(runge_approximate_points(b, {}, {}), DomainError);
}

TEST_CASE("similarity diagnostic on the exp(2x) solution") {
  Grid g(0.0, 1.25, 256);
  const PascaliSolver s = make_solver(g, 1.2, 1, "0", "-1");
  const Mask m = Mask::disk(g, 0.0, 1.0);
  const SimilarityDiagnostic d = similarity_diagnostic(s, exp2x(g), m);
  CHECK(d.residual <= 5e-2);
  CHECK(d.min_abs_w > 0.1);
  // a vanishing solution is refused
  CHECK_THROWS_AS(similarity_diagnostic(s, sample_scalar(g, [](cplx z) { return z; }), m), DomainError);
  const PascaliSolver v = make_solver(g, 1.2, 2, "0", "0");
  CHECK_THROWS_AS(similarity_diagnostic(v, GridFunction(g, 2), m), DimensionError);
}

TEST_CASE("iteration cap raises a convergence error") {
  Grid g(0.0, 1.0, 64);
  SolverOptions opt;
  opt.tol = 1e-12;
  opt.max_iter = 1;
  const PascaliSolver s = make_solver(g, 0.9, 1, "0", "-1", opt);
  try {
    s.solve_P(exp2x(g));
    FAIL("expected a convergence error");
  } catch (const ConvergenceError& e) {
    CHECK(e.iterations() == 1);
    CHECK(e.residual() > 1e-12);
  }
}

TEST_CASE("solver options are validated") {
  Grid g(0.0, 1.0, 16);
  SolverOptions bad;
  bad.tol = 0.0;
  CHECK_THROWS_AS(make_solver(g, 0.9, 1, "0", "-1", bad), DomainError);
  bad = {};
  bad.max_iter = 0;
  CHECK_THROWS_AS(make_solver(g, 0.9, 1, "0", "-1", bad), DomainError);
}
