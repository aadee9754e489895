#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace pascali {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands live on different grids or carry incompatible vector dimensions.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A precondition on a mask, domain or geometric object does not hold.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A computed or sampled value is NaN or infinite.
class NonFiniteError : public Error {
 public:
  NonFiniteError(const std::string& what, std::complex<double> where)
      : Error(what), where_(where) {}
  std::complex<double> where() const { return where_; }

 private:
  std::complex<double> where_;
};

/// Krylov iteration stopped at max_iter without reaching the tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, int iterations, double residual)
      : Error(what), iterations_(iterations), residual_(residual) {}
  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  int iterations_;
  double residual_;
};

/// An approximation pipeline stage missed its error budget.
class StageError : public Error {
 public:
  StageError(const std::string& stage, double best_error, const std::string& what)
      : Error(stage + ": " + what), stage_(stage), best_error_(best_error) {}
  const std::string& stage() const { return stage_; }
  double best_error() const { return best_error_; }

 private:
  std::string stage_;
  double best_error_;
};

}  // namespace pascali
