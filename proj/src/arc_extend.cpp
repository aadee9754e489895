#include <algorithm>
#include <cmath>
#include <limits>

#include "pascali/errors.hpp"
#include "pascali/geometry.hpp"

namespace pascali {

namespace {

constexpr int kOverlapSamples = 10;
constexpr double kMaxRadiusCells = 8.0;
constexpr double kMinRadiusCells = 3.0;

// Smooth ramp from 0 (u <= -1/2) to 1 (u >= 1/2).
double ramp(double u) { return smooth_step(u + 0.5); }

struct Piece {
  bool x_graph;  // graph over the real axis, else over the imaginary axis
  double lo;     // core range in (unwrapped) spline parameter
  double hi;
};

}  // namespace

class ArcExtensionImpl {
 public:
  ArcExtensionImpl(const JordanArc& arc, const ArcSamples& samples, const std::vector<cplx>& f_values,
                   const CoefficientField& coeff)
      : curve_(arc.curve()), closed_(arc.closed()), n_(coeff.dim()), coeff_(coeff), samples_(samples) {
    const std::size_t m = samples.t.size();
    if (m < 4) throw DomainError("arc extension needs at least four samples");
    if (f_values.size() != m * std::size_t(n_)) {
      throw DimensionError("arc data must hold n values per arc sample");
    }
    period_ = curve_.t_max();
    // Mean parameter step between samples.
    step_ = closed_ ? period_ / double(m) : (samples.t.back() - samples.t.front()) / double(m - 1);
    overlap_ = kOverlapSamples * step_;

    // Data splines in the spline parameter; closed curves get wrapped copies
    // on both sides so the natural end conditions sit far from the data used.
    for (int c = 0; c < n_; ++c) {
      std::vector<double> knots;
      std::vector<cplx> vals;
      if (closed_) {
        const int pad = int(std::min<std::size_t>(m, 16));
        for (int k = -pad; k < int(m) + pad; ++k) {
          const int kk = ((k % int(m)) + int(m)) % int(m);
          const double shift = k < 0 ? -period_ : (k >= int(m) ? period_ : 0.0);
          knots.push_back(samples.t[std::size_t(kk)] + shift);
          vals.push_back(f_values[std::size_t(kk) * std::size_t(n_) + std::size_t(c)]);
        }
      } else {
        for (std::size_t k = 0; k < m; ++k) {
          knots.push_back(samples.t[k]);
          vals.push_back(f_values[k * std::size_t(n_) + std::size_t(c)]);
        }
      }
      data_.emplace_back(std::move(knots), std::move(vals));
    }
    build_pieces();
  }

  int piece_count() const { return int(pieces_.size()); }
  double step() const { return step_; }

  double wrap(double t) const {
    if (!closed_) return t;
    t = std::fmod(t, period_);
    return t < 0.0 ? t + period_ : t;
  }

  // Parameter of the point of the arc nearest to z (clamped to the ends of
  // open arcs).
  double project(cplx z) const {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < samples_.z.size(); ++k) {
      const double d = std::norm(samples_.z[k] - z);
      if (d < bd) {
        bd = d;
        best = k;
      }
    }
    double t = samples_.t[best];
    for (int it = 0; it < 8; ++it) {
      const cplx g = curve_.eval(t) - z;
      const cplx d1 = curve_.deriv(t);
      const cplx d2 = curve_.deriv2(t);
      const double num = (std::conj(d1) * g).real();
      const double den = std::norm(d1) + (std::conj(d2) * g).real();
      if (!(den > 0.0)) break;
      double nt = t - num / den;
      nt = std::clamp(nt, t - 2.0 * step_, t + 2.0 * step_);
      if (!closed_) nt = std::clamp(nt, curve_.t_min(), curve_.t_max());
      if (std::abs(nt - t) < 1e-14 * (1.0 + std::abs(t))) {
        t = nt;
        break;
      }
      t = nt;
    }
    return wrap(t);
  }

  double distance(cplx z) const { return std::abs(curve_.eval(project(z)) - z); }

  // Open arcs: z lies past an end, outside the slab swept by the normals.
  bool beyond_end(cplx z) const {
    if (closed_) return false;
    const double t = project(z);
    const double along = (std::conj(curve_.deriv(t)) * (z - curve_.eval(t))).real() / std::abs(curve_.deriv(t));
    const double tol = 1e-9 * (1.0 + std::abs(z));
    if (t >= curve_.t_max()) return along > tol;
    if (t <= curve_.t_min()) return along < -tol;
    return false;
  }

  // Representative of t closest to the centre of piece p (closed curves).
  double near_piece(double t, const Piece& p) const {
    if (!closed_) return t;
    const double c = 0.5 * (p.lo + p.hi);
    return t + period_ * std::round((c - t) / period_);
  }

  std::vector<double> weights_at_param(double t) const {
    const std::size_t P = pieces_.size();
    std::vector<double> w(P, 0.0);
    if (P == 1) {
      w[0] = 1.0;
      return w;
    }
    double sum = 0.0;
    for (std::size_t p = 0; p < P; ++p) {
      const double tt = near_piece(t, pieces_[p]);
      const bool first_open = !closed_ && p == 0;
      const bool last_open = !closed_ && p + 1 == P;
      const double left = first_open ? 1.0 : ramp((tt - pieces_[p].lo) / overlap_);
      const double right = last_open ? 1.0 : 1.0 - ramp((tt - pieces_[p].hi) / overlap_);
      w[p] = left * right;
      sum += w[p];
    }
    for (auto& v : w) v /= sum;
    return w;
  }

  // Local graph extension of piece p evaluated at z.
  void piece_eval(const Piece& piece, double t0, cplx z, std::span<cplx> out) const {
    const int axis = piece.x_graph ? 0 : 1;
    auto coord = [axis](cplx v) { return axis == 0 ? v.real() : v.imag(); };
    auto other = [axis](cplx v) { return axis == 0 ? v.imag() : v.real(); };
    const double target = coord(z);
    // Newton solve coord(gamma(t)) = target inside the piece (with overlap).
    double t = std::clamp(near_piece(t0, piece), piece.lo - overlap_, piece.hi + overlap_);
    for (int it = 0; it < 30; ++it) {
      const double d = coord(curve_.deriv(t));
      if (d == 0.0) break;
      double nt = t - (coord(curve_.eval(t)) - target) / d;
      if (!closed_) nt = std::clamp(nt, curve_.t_min(), curve_.t_max());
      if (std::abs(nt - t) < 1e-15 * (1.0 + std::abs(t))) {
        t = nt;
        break;
      }
      t = nt;
    }
    const cplx P = curve_.eval(t);
    const cplx g1 = curve_.deriv(t);
    const double dc = coord(g1);
    const double delta = target - coord(P);  // nonzero only past the ends of open arcs
    const double slope = other(g1) / dc;     // psi' (graph slope)
    const double graph = other(P) + slope * delta;

    std::vector<cplx> b1(std::size_t(n_) * std::size_t(n_)), b2(b1.size());
    coeff_.eval_at(P, b1, b2);
    const double tw = wrap(t);
    const double td = closed_ ? tw : t;
    // Past the ends of open arcs the data continues quadratically in the
    // graph variable, and f1 is evaluated on the continued data.
    const double dc2 = coord(curve_.deriv2(t));
    std::vector<cplx> f(static_cast<std::size_t>(n_)), fg(static_cast<std::size_t>(n_));
    for (int c = 0; c < n_; ++c) {
      const DataSpline& d = data_[std::size_t(c)];
      const cplx d1 = d.deriv(td) / dc;
      const cplx d2 = delta != 0.0 ? (d.deriv2(td) - d1 * dc2) / (dc * dc) : cplx(0.0, 0.0);
      f[std::size_t(c)] = d.eval(td) + d1 * delta + 0.5 * d2 * delta * delta;
      fg[std::size_t(c)] = d1 + d2 * delta;
    }
    const cplx I(0.0, 1.0);
    for (int r = 0; r < n_; ++r) {
      cplx A(0.0, 0.0);
      for (int c = 0; c < n_; ++c) {
        A += b1[std::size_t(r * n_ + c)] * f[std::size_t(c)] + b2[std::size_t(r * n_ + c)] * std::conj(f[std::size_t(c)]);
      }
      const cplx fprime = fg[std::size_t(r)];  // derivative along the graph variable
      const cplx f1 = axis == 0 ? -(fprime + 2.0 * A) / (I - slope) : -(I * fprime + 2.0 * A) / (1.0 - I * slope);
      out[std::size_t(r)] = f[std::size_t(r)] + f1 * (other(z) - graph);
    }
  }

  void evaluate(cplx z, std::span<cplx> out) const {
    const double t0 = project(z);
    const std::vector<double> w = weights_at_param(t0);
    std::fill(out.begin(), out.end(), cplx(0.0, 0.0));
    std::vector<cplx> tmp(static_cast<std::size_t>(n_));
    for (std::size_t p = 0; p < pieces_.size(); ++p) {
      if (w[p] == 0.0) continue;
      piece_eval(pieces_[p], t0, z, tmp);
      for (int c = 0; c < n_; ++c) out[std::size_t(c)] += w[p] * tmp[std::size_t(c)];
    }
  }

  double pointwise_residual(cplx z, double delta) const {
    std::vector<cplx> xp(static_cast<std::size_t>(n_)), xm(xp.size()), yp(xp.size()), ym(xp.size()), c0(xp.size());
    evaluate(z + delta, xp);
    evaluate(z - delta, xm);
    evaluate(z + cplx(0.0, delta), yp);
    evaluate(z - cplx(0.0, delta), ym);
    evaluate(z, c0);
    std::vector<cplx> b1(std::size_t(n_) * std::size_t(n_)), b2(b1.size());
    coeff_.eval_at(z, b1, b2);
    double s = 0.0;
    for (int r = 0; r < n_; ++r) {
      const auto R = std::size_t(r);
      cplx v = 0.5 * ((xp[R] - xm[R]) / (2.0 * delta) + cplx(0.0, 1.0) * (yp[R] - ym[R]) / (2.0 * delta));
      for (int c = 0; c < n_; ++c) {
        v += b1[std::size_t(r * n_ + c)] * c0[std::size_t(c)] + b2[std::size_t(r * n_ + c)] * std::conj(c0[std::size_t(c)]);
      }
      s += std::norm(v);
    }
    return std::sqrt(s);
  }

  // Largest tube half-width allowed by curvature and self-approach.
  double reach_radius(double cap) const {
    double r = cap;
    const auto& z = samples_.z;
    for (std::size_t k = 0; k < samples_.t.size(); ++k) {
      const cplx d1 = curve_.deriv(samples_.t[k]);
      const cplx d2 = curve_.deriv2(samples_.t[k]);
      const double speed = std::abs(d1);
      const double kappa = std::abs((std::conj(d1) * d2).imag()) / (speed * speed * speed);
      if (kappa > 0.0) r = std::min(r, 0.5 / kappa);
    }
    const std::size_t m = z.size();
    const double spacing = mean_spacing();
    // Samples far apart along the curve must stay 2r apart in the plane.
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = a + 1; b < m; ++b) {
        std::size_t gap = b - a;
        if (closed_) gap = std::min(gap, m - gap);
        const double along = double(gap) * spacing;
        const double apart = std::abs(z[a] - z[b]);
        if (along > 4.0 * r && apart < 2.0 * r) r = apart / 2.1;
      }
    }
    return r;
  }

  double mean_spacing() const {
    double L = 0.0;
    for (std::size_t k = 1; k < samples_.z.size(); ++k) L += std::abs(samples_.z[k] - samples_.z[k - 1]);
    return L / double(samples_.z.size() - 1);
  }

 private:
  void build_pieces() {
    const auto& t = samples_.t;
    const std::size_t m = t.size();
    std::vector<bool> xg(m);
    for (std::size_t k = 0; k < m; ++k) {
      const cplx d = samples_.tangent[k];
      xg[k] = std::abs(d.real()) >= std::abs(d.imag());
    }
    // Runs of equal graph axis; boundaries halfway between samples.
    struct Run {
      bool x;
      double lo, hi;
    };
    std::vector<Run> runs;
    if (!closed_) {
      double lo = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 1; k < m; ++k) {
        if (xg[k] != xg[k - 1]) {
          const double b = 0.5 * (t[k] + t[k - 1]);
          runs.push_back({xg[k - 1], lo, b});
          lo = b;
        }
      }
      runs.push_back({xg[m - 1], lo, std::numeric_limits<double>::infinity()});
    } else {
      std::size_t start = m;
      for (std::size_t k = 0; k < m; ++k) {
        if (xg[k] != xg[(k + m - 1) % m]) {
          start = k;
          break;
        }
      }
      if (start == m) throw DomainError("closed curve never turns past 45 degrees; cannot split into graphs");
      double lo = 0.5 * (t[start] + (start == 0 ? t[m - 1] - period_ : t[start - 1]));
      for (std::size_t q = 1; q <= m; ++q) {
        const std::size_t k = (start + q) % m;
        const std::size_t prev = (start + q - 1) % m;
        if (xg[k] != xg[prev] || q == m) {
          double tk = t[k] + period_ * double((start + q) / m);
          double tp = t[prev] + period_ * double((start + q - 1) / m);
          const double b = 0.5 * (tk + tp);
          runs.push_back({xg[prev], lo, b});
          lo = b;
        }
      }
    }
    // Merge runs too short to carry an overlap into a neighbour.
    auto length = [&](const Run& r) {
      const double lo = std::isfinite(r.lo) ? r.lo : t.front();
      const double hi = std::isfinite(r.hi) ? r.hi : t.back();
      return hi - lo;
    };
    std::vector<Run> merged;
    for (Run r : runs) {
      if (!merged.empty() && length(merged.back()) < 2.0 * overlap_) {
        r.lo = merged.back().lo;
        merged.pop_back();
      }
      merged.push_back(r);
    }
    if (merged.size() > 1 && length(merged.back()) < 2.0 * overlap_) {
      const double hi = merged.back().hi;
      merged.pop_back();
      merged.back().hi = hi;
    }
    for (const Run& r : merged) pieces_.push_back({r.x, r.lo, r.hi});
    // Each piece must stay a graph over its axis on its extended range.
    for (const Piece& p : pieces_) {
      double lo = p.lo - overlap_;
      double hi = p.hi + overlap_;
      if (!closed_) {
        lo = std::max(lo, t.front());
        hi = std::min(hi, t.back());
      }
      const int steps = std::max(8, int((hi - lo) / step_) * 2);
      int sign = 0;
      for (int q = 0; q <= steps; ++q) {
        const cplx d = curve_.deriv(lo + (hi - lo) * q / steps);
        const double c = p.x_graph ? d.real() : d.imag();
        if (std::abs(c) < 0.2 * std::abs(d)) throw DomainError("arc turns too sharply for a graph decomposition");
        const int s = c > 0 ? 1 : -1;
        if (sign != 0 && s != sign) throw DomainError("arc piece is not a graph over its axis");
        sign = s;
      }
    }
  }

  CubicSpline curve_;
  bool closed_;
  int n_;
  CoefficientField coeff_;
  ArcSamples samples_;
  double period_ = 0.0;
  double step_ = 0.0;
  double overlap_ = 0.0;
  std::vector<DataSpline> data_;
  std::vector<Piece> pieces_;
};

void ArcExtension::evaluate(cplx z, std::span<cplx> out) const { impl->evaluate(z, out); }

std::vector<double> ArcExtension::weights(cplx z) const { return impl->weights_at_param(impl->project(z)); }

double ArcExtension::pointwise_residual(cplx z, double delta) const { return impl->pointwise_residual(z, delta); }

bool ArcExtension::beyond_end(cplx z) const { return impl->beyond_end(z); }

ArcExtension arc_extend(const JordanArc& arc, const ArcSamples& samples, const std::vector<cplx>& f_values,
                        const CoefficientField& coeff, double radius) {
  const Grid& g = coeff.grid();
  const double h = g.spacing();
  auto impl = std::make_shared<ArcExtensionImpl>(arc, samples, f_values, coeff);
  const double reach = impl->reach_radius(kMaxRadiusCells * h);
  double r = radius > 0.0 ? std::min(radius, reach) : reach;
  if (r < kMinRadiusCells * h) {
    throw DomainError("tubular neighbourhood of the arc is narrower than three grid cells (radius " +
                      std::to_string(r / h) + " cells); refine the grid");
  }

  ArcExtension ext{Mask(g), GridFunction(g, coeff.dim()), r, impl->piece_count(), 0.0, impl};
  const Mask candidates = rasterize_arc(arc, g).dilated(r / h + 1.5);
  std::vector<cplx> buf(static_cast<std::size_t>(coeff.dim()));
  for (std::size_t k : candidates.indices()) {
    const cplx z = g.node(k);
    const double t = impl->project(z);
    if (std::abs(arc.curve().eval(t) - z) > r) continue;
    ext.tube.set(k, true);
    const auto w = impl->weights_at_param(t);
    double sum = 0.0;
    for (double v : w) sum += v;
    ext.weight_defect = std::max(ext.weight_defect, std::abs(sum - 1.0));
    impl->evaluate(z, buf);
    auto dst = ext.F.node(k);
    std::copy(buf.begin(), buf.end(), dst.begin());
  }
  return ext;
}

}  // namespace pascali
