#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

#include "pascali/expr.hpp"

using pascali::expr::cplx;
using pascali::expr::EvalError;
using pascali::expr::Expr;
using pascali::expr::ParseError;

namespace {

bool near(cplx a, cplx b, double tol = 1e-12) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("scalar evaluation") {
  CHECK(near(Expr::parse("z*conj(z)").eval_scalar({1.0, 1.0}), 2.0));
  CHECK(near(Expr::parse("exp(2*x)").eval_scalar(0.5), std::exp(1.0)));
  CHECK(near(Expr::parse("x+i*y").eval_scalar({3.0, 4.0}), {3.0, 4.0}));
  CHECK(near(Expr::parse("1/(z-2)").eval_scalar(0.0), -0.5));
  CHECK(near(Expr::parse("conj(z)^2").eval_scalar({1.0, 1.0}), {0.0, -2.0}));
  CHECK(near(Expr::parse("re(z) + im(z) + abs(z)").eval_scalar({3.0, 4.0}), 12.0));
  CHECK(near(Expr::parse("sin(z)^2 + cos(z)^2").eval_scalar({0.3, -0.7}), 1.0));
  CHECK(near(Expr::parse("z^-2").eval_scalar(2.0), 0.25));
  CHECK(near(Expr::parse("2.5e-1 * 4").eval_scalar(0.0), 1.0));
}

TEST_CASE("precedence: power binds tighter than unary minus, which binds tighter than products") {
  CHECK(near(Expr::parse("-2^2").eval_scalar(0.0), -4.0));
  CHECK(near(Expr::parse("2*3^2").eval_scalar(0.0), 18.0));
  CHECK(near(Expr::parse("1-2-3").eval_scalar(0.0), -4.0));
  CHECK(near(Expr::parse("8/4/2").eval_scalar(0.0), 1.0));
  CHECK(near(Expr::parse("-z*2").eval_scalar(1.0), -2.0));
}

TEST_CASE("matrix and vector literals") {
  const Expr m = Expr::parse("[[0,-1],[-1,0]]");
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 2);
  const auto v = m.eval(0.0);
  CHECK(v(0, 1) == cplx(-1.0));
  CHECK(v(1, 0) == cplx(-1.0));
  CHECK(v(0, 0) == cplx(0.0));
  const Expr col = Expr::parse("[exp(2*x), z]");
  CHECK(col.rows() == 2);
  CHECK(col.cols() == 1);
  CHECK_FALSE(col.is_scalar());
  CHECK_THROWS_AS(col.eval_scalar(0.0), pascali::DimensionError);
}

TEST_CASE("x and y are the real and imaginary parts of z") {
  std::mt19937 rng(1);
  std::normal_distribution<double> nd(0.0, 3.0);
  const Expr e = Expr::parse("x+i*y");
  for (int k = 0; k < 100; ++k) {
    const cplx z(nd(rng), nd(rng));
    CHECK(near(e.eval_scalar(z), z));
  }
}

TEST_CASE("zero detection") {
  CHECK(Expr::parse("0").is_zero());
  CHECK(Expr::parse("[[0,0],[0,0]]").is_zero());
  CHECK_FALSE(Expr::parse("[[0,1],[0,0]]").is_zero());
  CHECK_FALSE(Expr::parse("z-z").is_zero());
}

TEST_CASE("parse errors carry offsets and expectations") {
  try {
    Expr::parse("1 + * 2");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 4);
    CHECK_FALSE(e.expected().empty());
  }
  try {
    Expr::parse("foo(z)");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 0);
  }
  try {
    Expr::parse("[[1,2],[3]]");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("dimension") != std::string::npos);
  }
  CHECK_THROWS_AS(Expr::parse("z^1.5"), ParseError);
  CHECK_THROWS_AS(Expr::parse("(z"), ParseError);
  CHECK_THROWS_AS(Expr::parse(""), ParseError);
  CHECK_THROWS_AS(Expr::parse("z z"), ParseError);
}

TEST_CASE("evaluation errors carry the point") {
  try {
    Expr::parse("1/(z-2)").eval_scalar(2.0);
    FAIL("expected an evaluation error");
  } catch (const EvalError& e) {
    CHECK(e.where() == cplx(2.0));
  }
  CHECK_THROWS_AS(Expr::parse("exp(exp(exp(z)))").eval_scalar(10.0), EvalError);
}

TEST_CASE("printing is a fixed point of parse") {
  for (const char* text : {"z*conj(z)", "-2^2", "(1+z)^3/(z-2)", "[[0,-1],[-1,0]]", "exp(2*x)+i*y",
                           "1-(2-3)", "-(z+1)*-(z-1)"}) {
    const std::string t = text;
    const std::string once = Expr::parse(t).to_string();
    const std::string twice = Expr::parse(once).to_string();
    CHECK(once == twice);
    CHECK(near(Expr::parse(once).eval(cplx(0.3, 0.2)).data[0], Expr::parse(t).eval(cplx(0.3, 0.2)).data[0]));
  }
}

TEST_CASE("parser survives arbitrary bytes") {
  std::mt19937 rng(42);
  const std::string alphabet = "zxyi0123456789.e+-*/^()[],expsincoabjrm \t\n\x01\xff";
  int failures = 0;
  for (int k = 0; k < 3000; ++k) {
    std::string s;
    const int len = int(rng() % 24);
    for (int c = 0; c < len; ++c) s += alphabet[rng() % alphabet.size()];
    try {
      const Expr e = Expr::parse(s);
      try {
        (void)e.eval(cplx(0.3, 0.1));
      } catch (const EvalError&) {
      }
    } catch (const ParseError& e) {
      ++failures;
      CHECK(e.offset() <= s.size());
    }
  }
  CHECK(failures > 0);
}
