#pragma once

#include <complex>
#include <vector>

namespace pascali {

using cplx = std::complex<double>;

/// Interpolating cubic spline t -> C through control points, parametrized by
/// cumulative chord length. Open splines use natural end conditions; closed
/// splines are periodic and the last control point must not repeat the first.
class CubicSpline {
 public:
  static CubicSpline open(std::vector<cplx> points);
  static CubicSpline closed(std::vector<cplx> points);
  /// Periodic spline through `count` equally spaced points of a circle.
  static CubicSpline circle(cplx center, double radius, int count = 64);

  bool is_closed() const { return closed_; }
  double t_min() const { return 0.0; }
  double t_max() const { return knots_.back(); }
  const std::vector<cplx>& control_points() const { return points_; }

  cplx eval(double t) const;
  cplx deriv(double t) const;
  cplx deriv2(double t) const;

  /// Parameters at (approximately) uniform arc-length spacing ds, including
  /// both end parameters for open curves; for closed curves the end parameter
  /// is omitted since it coincides with the start.
  std::vector<double> resample(double ds) const;
  /// Arc length between parameters a <= b (Gauss-Legendre per knot interval).
  double arc_length(double a, double b) const;
  double length() const { return arc_length(t_min(), t_max()); }

 private:
  CubicSpline(std::vector<cplx> points, bool closed);
  // Locates the knot interval of t (wrapped for closed curves); returns
  // the interval index and the local offset.
  std::pair<int, double> locate(double t) const;

  std::vector<cplx> points_;
  bool closed_;
  std::vector<double> knots_;   // size m + 1 (closed: includes wrap-around)
  std::vector<cplx> values_;    // size m + 1
  std::vector<cplx> second_;    // second derivatives at knots, size m + 1
};

/// Cubic spline of scalar complex data over increasing real knots, with
/// parabolic run-out ends and a quadratic continuation past them.
class DataSpline {
 public:
  DataSpline(std::vector<double> knots, std::vector<cplx> values);
  cplx eval(double t) const;
  cplx deriv(double t) const;
  cplx deriv2(double t) const;

 private:
  std::vector<double> knots_;
  std::vector<cplx> values_;
  std::vector<cplx> second_;
};

}  // namespace pascali
