#include "pascali/spline.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pascali/errors.hpp"

namespace pascali {

namespace {

// Second derivatives of the cubic spline through (t_i, y_i): natural ends
// (M = 0) or parabolic run-out (M_0 = M_1, M_m = M_{m-1}).
std::vector<cplx> natural_second_derivatives(const std::vector<double>& t, const std::vector<cplx>& y,
                                             bool runout = false) {
  const std::size_t m = t.size() - 1;
  std::vector<cplx> M(m + 1, cplx(0.0, 0.0));
  if (m < 2) return M;
  // Thomas algorithm on the interior equations i = 1..m-1.
  std::vector<double> diag(m + 1), upper(m + 1);
  std::vector<cplx> rhs(m + 1);
  for (std::size_t i = 1; i < m; ++i) {
    const double h0 = t[i] - t[i - 1];
    const double h1 = t[i + 1] - t[i];
    diag[i] = 2.0 * (h0 + h1);
    upper[i] = h1;
    rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
  }
  if (runout) {
    diag[1] += t[1] - t[0];
    diag[m - 1] += t[m] - t[m - 1];
  }
  for (std::size_t i = 2; i < m; ++i) {
    const double lower = t[i] - t[i - 1];
    const double f = lower / diag[i - 1];
    diag[i] -= f * upper[i - 1];
    rhs[i] -= f * rhs[i - 1];
  }
  for (std::size_t i = m - 1; i >= 1; --i) {
    cplx v = rhs[i];
    if (i + 1 < m) v -= upper[i] * M[i + 1];
    M[i] = v / diag[i];
  }
  if (runout) {
    M[0] = M[1];
    M[m] = M[m - 1];
  }
  return M;
}

// Second derivatives of the periodic cubic spline; knots has m + 1 entries and
// y[m] == y[0].
std::vector<cplx> periodic_second_derivatives(const std::vector<double>& t, const std::vector<cplx>& y) {
  const int m = int(t.size()) - 1;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXcd b(m);
  auto h = [&](int i) {
    i = ((i % m) + m) % m;
    return t[std::size_t(i) + 1] - t[std::size_t(i)];
  };
  auto val = [&](int i) { return y[std::size_t(((i % m) + m) % m)]; };
  for (int i = 0; i < m; ++i) {
    const double h0 = h(i - 1);
    const double h1 = h(i);
    A(i, ((i - 1) % m + m) % m) += h0;
    A(i, i) += 2.0 * (h0 + h1);
    A(i, (i + 1) % m) += h1;
    b(i) = 6.0 * ((val(i + 1) - val(i)) / h1 - (val(i) - val(i - 1)) / h0);
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  const Eigen::VectorXd re = lu.solve(b.real());
  const Eigen::VectorXd im = lu.solve(b.imag());
  std::vector<cplx> M(std::size_t(m) + 1);
  for (int i = 0; i < m; ++i) M[std::size_t(i)] = cplx(re(i), im(i));
  M[std::size_t(m)] = M[0];
  return M;
}

struct Piece {
  double a, b;
  cplx ya, yb, Ma, Mb;
};

cplx piece_eval(const Piece& p, double t) {
  const double H = p.b - p.a;
  const double u = t - p.a;
  const double v = p.b - t;
  return p.Ma * (v * v * v) / (6.0 * H) + p.Mb * (u * u * u) / (6.0 * H) + (p.ya / H - p.Ma * H / 6.0) * v +
         (p.yb / H - p.Mb * H / 6.0) * u;
}

cplx piece_deriv(const Piece& p, double t) {
  const double H = p.b - p.a;
  const double u = t - p.a;
  const double v = p.b - t;
  return -p.Ma * (v * v) / (2.0 * H) + p.Mb * (u * u) / (2.0 * H) - (p.ya / H - p.Ma * H / 6.0) +
         (p.yb / H - p.Mb * H / 6.0);
}

cplx piece_deriv2(const Piece& p, double t) {
  const double H = p.b - p.a;
  return p.Ma * (p.b - t) / H + p.Mb * (t - p.a) / H;
}

int find_interval(const std::vector<double>& knots, double t) {
  const auto it = std::upper_bound(knots.begin(), knots.end(), t);
  int i = int(it - knots.begin()) - 1;
  return std::clamp(i, 0, int(knots.size()) - 2);
}

}  // namespace

CubicSpline::CubicSpline(std::vector<cplx> points, bool closed) : points_(std::move(points)), closed_(closed) {
  const std::size_t min_points = closed ? 3 : 2;
  if (points_.size() < min_points) {
    throw DomainError(std::string(closed ? "closed" : "open") + " curve needs at least " +
                      std::to_string(min_points) + " control points");
  }
  for (const cplx& p : points_) {
    if (!std::isfinite(p.real()) || !std::isfinite(p.imag())) throw DomainError("non-finite control point");
  }
  values_ = points_;
  if (closed_) values_.push_back(points_.front());
  knots_.assign(values_.size(), 0.0);
  for (std::size_t i = 1; i < values_.size(); ++i) {
    const double d = std::abs(values_[i] - values_[i - 1]);
    if (!(d > 0.0)) throw DomainError("repeated consecutive control point at index " + std::to_string(i));
    knots_[i] = knots_[i - 1] + d;
  }
  second_ = closed_ ? periodic_second_derivatives(knots_, values_) : natural_second_derivatives(knots_, values_);
}

CubicSpline CubicSpline::open(std::vector<cplx> points) { return CubicSpline(std::move(points), false); }
CubicSpline CubicSpline::closed(std::vector<cplx> points) { return CubicSpline(std::move(points), true); }

CubicSpline CubicSpline::circle(cplx center, double radius, int count) {
  if (!(radius > 0.0)) throw DomainError("circle radius must be positive");
  std::vector<cplx> pts;
  pts.reserve(std::size_t(count));
  for (int k = 0; k < count; ++k) {
    pts.push_back(center + std::polar(radius, 2.0 * std::numbers::pi * k / count));
  }
  return closed(std::move(pts));
}

std::pair<int, double> CubicSpline::locate(double t) const {
  if (closed_) {
    const double T = t_max();
    t = std::fmod(t, T);
    if (t < 0.0) t += T;
  }
  return {find_interval(knots_, t), t};
}

cplx CubicSpline::eval(double t) const {
  if (!closed_ && (t < t_min() || t > t_max())) {
    const double e = t < t_min() ? t_min() : t_max();
    return eval(e) + deriv(e) * (t - e);
  }
  const auto [i, tt] = locate(t);
  const auto k = std::size_t(i);
  return piece_eval({knots_[k], knots_[k + 1], values_[k], values_[k + 1], second_[k], second_[k + 1]}, tt);
}

cplx CubicSpline::deriv(double t) const {
  if (!closed_) t = std::clamp(t, t_min(), t_max());
  const auto [i, tt] = locate(t);
  const auto k = std::size_t(i);
  return piece_deriv({knots_[k], knots_[k + 1], values_[k], values_[k + 1], second_[k], second_[k + 1]}, tt);
}

cplx CubicSpline::deriv2(double t) const {
  if (!closed_ && (t < t_min() || t > t_max())) return {0.0, 0.0};
  const auto [i, tt] = locate(t);
  const auto k = std::size_t(i);
  return piece_deriv2({knots_[k], knots_[k + 1], values_[k], values_[k + 1], second_[k], second_[k + 1]}, tt);
}

double CubicSpline::arc_length(double a, double b) const {
  static constexpr double x[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                  0.9061798459386640};
  static constexpr double w[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                                  0.2369268850561891};
  if (b <= a) return 0.0;
  // Split at knots and subdivide each interval so the quadrature stays accurate.
  std::vector<double> cuts{a};
  for (double k : knots_)
    if (k > a && k < b) cuts.push_back(k);
  cuts.push_back(b);
  double total = 0.0;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    constexpr int sub = 4;
    const double step = (cuts[c + 1] - cuts[c]) / sub;
    for (int s = 0; s < sub; ++s) {
      const double lo = cuts[c] + s * step;
      const double mid = lo + 0.5 * step;
      for (int q = 0; q < 5; ++q) total += 0.5 * step * w[q] * std::abs(deriv(mid + 0.5 * step * x[q]));
    }
  }
  return total;
}

std::vector<double> CubicSpline::resample(double ds) const {
  if (!(ds > 0.0)) throw DomainError("resampling step must be positive");
  // Cumulative arc-length table, then inversion by interpolation plus a
  // Newton step on |gamma'|.
  constexpr int per_interval = 64;
  std::vector<double> ts{0.0};
  std::vector<double> ss{0.0};
  for (std::size_t k = 0; k + 1 < knots_.size(); ++k) {
    const double step = (knots_[k + 1] - knots_[k]) / per_interval;
    for (int s = 1; s <= per_interval; ++s) {
      const double t1 = knots_[k] + s * step;
      ss.push_back(ss.back() + arc_length(ts.back(), t1));
      ts.push_back(t1);
    }
  }
  const double L = ss.back();
  const int segments = std::max(1, int(std::ceil(L / ds)));
  const int count = closed_ ? segments : segments + 1;
  std::vector<double> out;
  out.reserve(std::size_t(count));
  for (int q = 0; q < count; ++q) {
    const double target = L * q / segments;
    const auto it = std::lower_bound(ss.begin(), ss.end(), target);
    std::size_t hi = std::clamp<std::size_t>(std::size_t(it - ss.begin()), 1, ss.size() - 1);
    const std::size_t lo = hi - 1;
    const double frac = (ss[hi] > ss[lo]) ? (target - ss[lo]) / (ss[hi] - ss[lo]) : 0.0;
    double t = ts[lo] + frac * (ts[hi] - ts[lo]);
    const double speed = std::abs(deriv(t));
    if (speed > 0.0) {
      const double err = ss[lo] + arc_length(ts[lo], t) - target;
      t = std::clamp(t - err / speed, ts[lo], ts[hi]);
    }
    out.push_back(t);
  }
  if (!closed_) {
    out.front() = t_min();
    out.back() = t_max();
  }
  return out;
}

DataSpline::DataSpline(std::vector<double> knots, std::vector<cplx> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
  if (knots_.size() != values_.size() || knots_.size() < 2) {
    throw DimensionError("data spline needs matching knots and values (at least two)");
  }
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (!(knots_[i] > knots_[i - 1])) throw DomainError("data spline knots must increase strictly");
  }
  second_ = natural_second_derivatives(knots_, values_, true);
}

// Past the ends the spline continues with its quadratic Taylor polynomial.
cplx DataSpline::eval(double t) const {
  if (t < knots_.front() || t > knots_.back()) {
    const double e = t < knots_.front() ? knots_.front() : knots_.back();
    const double d = t - e;
    return eval(e) + deriv(e) * d + 0.5 * deriv2(e) * d * d;
  }
  const auto k = std::size_t(find_interval(knots_, t));
  return piece_eval({knots_[k], knots_[k + 1], values_[k], values_[k + 1], second_[k], second_[k + 1]}, t);
}

cplx DataSpline::deriv(double t) const {
  if (t < knots_.front() || t > knots_.back()) {
    const double e = t < knots_.front() ? knots_.front() : knots_.back();
    return deriv(e) + deriv2(e) * (t - e);
  }
  const auto k = std::size_t(find_interval(knots_, t));
  return piece_deriv({knots_[k], knots_[k + 1], values_[k], values_[k + 1], second_[k], second_[k + 1]}, t);
}

cplx DataSpline::deriv2(double t) const {
  t = std::clamp(t, knots_.front(), knots_.back());
  const auto k = std::size_t(find_interval(knots_, t));
  return piece_deriv2({knots_[k], knots_[k + 1], values_[k], values_[k + 1], second_[k], second_[k + 1]}, t);
}

}  // namespace pascali
