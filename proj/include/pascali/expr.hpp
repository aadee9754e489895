#pragma once

// Expression language for coefficient fields, targets and error budgets.
// The grammar is documented in docs/grammar.md.

#include <complex>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "pascali/errors.hpp"

namespace pascali::expr {

using cplx = std::complex<double>;

class ParseError : public Error {
 public:
  ParseError(std::size_t offset, std::vector<std::string> expected, const std::string& message);
  std::size_t offset() const { return offset_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  std::size_t offset_;
  std::vector<std::string> expected_;
};

class EvalError : public Error {
 public:
  EvalError(const std::string& what, cplx z) : Error(what), z_(z) {}
  cplx where() const { return z_; }

 private:
  cplx z_;
};

/// Result of evaluating an expression: a scalar (1x1), a column vector
/// (rows x 1) or a matrix, stored row-major.
struct Value {
  int rows = 1;
  int cols = 1;
  std::vector<cplx> data;

  bool is_scalar() const { return rows == 1 && cols == 1; }
  cplx operator()(int r, int c) const { return data[std::size_t(r * cols + c)]; }
};

struct Node;

class Expr {
 public:
  /// Parses `text`; throws ParseError carrying the byte offset of the failure.
  static Expr parse(std::string_view text);

  Value eval(cplx z) const;
  /// Shorthand for scalar expressions; throws DimensionError otherwise.
  cplx eval_scalar(cplx z) const;

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool is_scalar() const { return rows_ == 1 && cols_ == 1; }
  /// True when every entry is a literal zero.
  bool is_zero() const;

  /// Canonical text with minimal parentheses; parse(to_string()) prints back identically.
  std::string to_string() const;

 private:
  Expr(std::shared_ptr<const Node> root, int rows, int cols) : root_(std::move(root)), rows_(rows), cols_(cols) {}

  std::shared_ptr<const Node> root_;
  int rows_ = 1;
  int cols_ = 1;
};

}  // namespace pascali::expr
