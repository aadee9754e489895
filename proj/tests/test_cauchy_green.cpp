#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pascali/cauchy_green.hpp"
#include "pascali/errors.hpp"
#include "oracles.hpp"

using namespace pascali;

namespace {

GridFunction random_density(const Grid& g, int dim, std::mt19937& rng) {
  std::normal_distribution<double> nd;
  GridFunction f(g, dim);
  for (auto& v : f.values()) v = {nd(rng), nd(rng)};
  return f;
}

double rel_sup(const GridFunction& a, const GridFunction& b) {
  const Mask all(a.grid(), true);
  return sup_norm(a - b, all) / sup_norm(b, all);
}

}  // namespace

TEST_CASE("FFT convolution equals the direct sum") {
  std::mt19937 rng(2024);
  for (int N : {16, 32}) {
    Grid g(cplx(0.1, -0.2), 1.0, N);
    const Mask D = Mask::disk(g, g.center(), 0.9);
    CauchyGreenOperator T(g, D);
    for (int trial = 0; trial < 3; ++trial) {
      const GridFunction f = random_density(g, 2, rng);
      CHECK(rel_sup(T.apply(f), oracle::direct_cauchy_green(g, D, f)) < 1e-12);
    }
  }
}

TEST_CASE("kernel samples and the dropped self term") {
  Grid g(0.0, 1.0, 16);
  CauchyGreenOperator T(g, Mask(g, true));
  CHECK(T.kernel(0, 0) == cplx(0.0));
  const double h = g.spacing();
  CHECK(std::abs(T.kernel(3, -2) - h * h / (std::numbers::pi * cplx(3.0 * h, -2.0 * h))) < 1e-15);
}

TEST_CASE("zero density maps to zero") {
  Grid g(0.0, 1.0, 32);
  CauchyGreenOperator T(g, Mask::disk(g, 0.0, 0.8));
  CHECK(sup_norm(T.apply(GridFunction(g, 1)), Mask(g, true)) == 0.0);
  CHECK(cg_residual(T, GridFunction(g, 1)) == 0.0);
}

TEST_CASE("complex linearity") {
  std::mt19937 rng(5);
  Grid g(0.0, 1.0, 32);
  CauchyGreenOperator T(g, Mask::disk(g, 0.0, 0.8));
  const GridFunction a = random_density(g, 1, rng);
  const GridFunction b = random_density(g, 1, rng);
  const cplx s(0.3, -1.2), t(-2.0, 0.5);
  const GridFunction lhs = T.apply(s * a + t * b);
  const GridFunction rhs = s * T.apply(a) + t * T.apply(b);
  CHECK(rel_sup(lhs, rhs) < 1e-13);
}

TEST_CASE("adjoint matches the sesquilinear pairing") {
  std::mt19937 rng(8);
  Grid g(0.0, 1.0, 32);
  const Mask D = Mask::disk(g, 0.2, 0.7);
  CauchyGreenOperator T(g, D);
  for (int trial = 0; trial < 5; ++trial) {
    const GridFunction a = random_density(g, 1, rng);
    const GridFunction b = random_density(g, 1, rng);
    const GridFunction Tb = T.apply(b);
    const GridFunction Ta = T.apply_adjoint(a);
    cplx lhs = 0.0, rhs = 0.0;
    for (std::size_t k = 0; k < g.node_count(); ++k) {
      lhs += std::conj(a.node(k)[0]) * Tb.node(k)[0];
      rhs += std::conj(Ta.node(k)[0]) * b.node(k)[0];
    }
    CHECK(std::abs(lhs - rhs) < 1e-10 * std::abs(lhs));
    // the adjoint vanishes off the domain
    CHECK(sup_norm(Ta, ~D) == 0.0);
  }
}

TEST_CASE("T(1) = conj(z) inside the unit disk") {
  Grid g(0.0, 1.25, 256);
  const Mask D = Mask::disk(g, 0.0, 1.0);
  CauchyGreenOperator T(g, D);
  GridFunction one(g, 1);
  for (auto& v : one.values()) v = 1.0;
  const GridFunction u = T.apply(one);
  CHECK(std::abs(interpolate_scalar(u, cplx(0.3, 0.4)) - cplx(0.3, -0.4)) < 2e-2);
  CHECK(std::abs(interpolate_scalar(u, 0.0)) < 2e-2);
  CHECK(cg_residual(T, one) <= 5e-2);
}

TEST_CASE("dbar of T(g) recovers g and improves under refinement") {
  auto residual = [](int N) {
    Grid g(0.0, 1.0, N);
    CauchyGreenOperator T(g, Mask::disk(g, 0.0, 0.9));
    const GridFunction f = sample_scalar(g, [](cplx z) { return oracle::bump(z - cplx(0.1, 0.0), 0.5); });
    return cg_residual(T, f);
  };
  const double r64 = residual(64), r128 = residual(128), r256 = residual(256);
  CHECK(r128 < r64);
  CHECK(r256 < r128);
  CHECK(r256 <= 1e-2);
}

TEST_CASE("T(g) stays bounded across the domain boundary") {
  double prev = 0.0;
  for (int N : {64, 128, 256}) {
    Grid g(0.0, 1.25, N);
    const Mask D = Mask::disk(g, 0.0, 1.0);
    CauchyGreenOperator T(g, D);
    GridFunction one(g, 1);
    for (auto& v : one.values()) v = 1.0;
    const Mask collar = D.dilated(3.0) - D.eroded(3);
    const double s = sup_norm(T.apply(one), collar);
    CHECK(s < 1.1);  // |conj(z)| = 1 on the circle
    if (prev > 0.0) CHECK(s < 1.05 * prev);
    prev = s;
  }
}

TEST_CASE("grid mismatch is rejected") {
  Grid a(0.0, 1.0, 16), b(0.0, 1.0, 32);
  CauchyGreenOperator T(a, Mask(a, true));
  CHECK_THROWS_AS(T.apply(GridFunction(b, 1)), DimensionError);
  CHECK_THROWS_AS(CauchyGreenOperator(a, Mask(b, true)), DimensionError);
}
