#include "pascali/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <sstream>

#include "pascali/errors.hpp"

namespace pascali {

namespace {

constexpr int kPolylineSegments = 1024;

std::vector<cplx> curve_polyline(const CubicSpline& c, int segments) {
  const double L = c.length();
  std::vector<cplx> out;
  for (double t : c.resample(L / segments)) out.push_back(c.eval(t));
  return out;
}

// Signed area by the shoelace formula over a closed polyline.
double shoelace(const std::vector<cplx>& p) {
  double a = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const cplx u = p[k];
    const cplx v = p[(k + 1) % p.size()];
    a += u.real() * v.imag() - v.real() * u.imag();
  }
  return 0.5 * a;
}

double cross(cplx a, cplx b) { return a.real() * b.imag() - a.imag() * b.real(); }

bool segments_intersect(cplx p1, cplx p2, cplx q1, cplx q2) {
  const double d1 = cross(q2 - q1, p1 - q1);
  const double d2 = cross(q2 - q1, p2 - q1);
  const double d3 = cross(p2 - p1, q1 - p1);
  const double d4 = cross(p2 - p1, q2 - p1);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
  auto on_segment = [](cplx a, cplx b, cplx c) {
    return std::min(a.real(), b.real()) <= c.real() && c.real() <= std::max(a.real(), b.real()) &&
           std::min(a.imag(), b.imag()) <= c.imag() && c.imag() <= std::max(a.imag(), b.imag());
  };
  if (d1 == 0 && on_segment(q1, q2, p1)) return true;
  if (d2 == 0 && on_segment(q1, q2, p2)) return true;
  if (d3 == 0 && on_segment(p1, p2, q1)) return true;
  if (d4 == 0 && on_segment(p1, p2, q2)) return true;
  return false;
}

// Index pairs of intersecting non-adjacent segments of one polyline.
bool polyline_self_intersects(const std::vector<cplx>& p, bool closed, cplx* where) {
  const std::size_t m = closed ? p.size() : p.size() - 1;
  for (std::size_t a = 0; a < m; ++a) {
    const cplx a1 = p[a];
    const cplx a2 = p[(a + 1) % p.size()];
    for (std::size_t b = a + 2; b < m; ++b) {
      if (closed && a == 0 && b == m - 1) continue;
      const cplx b1 = p[b];
      const cplx b2 = p[(b + 1) % p.size()];
      if (segments_intersect(a1, a2, b1, b2)) {
        if (where) *where = a1;
        return true;
      }
    }
  }
  return false;
}

bool polylines_intersect(const std::vector<cplx>& p, bool p_closed, const std::vector<cplx>& q, bool q_closed,
                         cplx* where) {
  const std::size_t mp = p_closed ? p.size() : p.size() - 1;
  const std::size_t mq = q_closed ? q.size() : q.size() - 1;
  for (std::size_t a = 0; a < mp; ++a) {
    for (std::size_t b = 0; b < mq; ++b) {
      if (segments_intersect(p[a], p[(a + 1) % p.size()], q[b], q[(b + 1) % q.size()])) {
        if (where) *where = p[a];
        return true;
      }
    }
  }
  return false;
}

std::pair<double, cplx> polyline_distance(const std::vector<cplx>& p, cplx z) {
  double best = std::numeric_limits<double>::infinity();
  cplx tangent(1.0, 0.0);
  for (std::size_t k = 0; k < p.size(); ++k) {
    const cplx a = p[k];
    const cplx b = p[(k + 1) % p.size()];
    const cplx d = b - a;
    const double len2 = std::norm(d);
    double s = len2 > 0 ? std::clamp(((z - a) * std::conj(d)).real() / len2, 0.0, 1.0) : 0.0;
    const double dist = std::abs(a + s * d - z);
    if (dist < best) {
      best = dist;
      tangent = len2 > 0 ? d / std::sqrt(len2) : cplx(1.0, 0.0);
    }
  }
  return {best, tangent};
}

std::string point_text(cplx z) {
  std::ostringstream os;
  os << "(" << z.real() << ", " << z.imag() << ")";
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------- CompactDomain

CompactDomain::CompactDomain(CubicSpline outer, std::vector<CubicSpline> holes)
    : outer_(std::move(outer)), holes_(std::move(holes)) {
  if (!outer_.is_closed()) throw DomainError("domain boundary must be a closed curve");
  polylines_.push_back(curve_polyline(outer_, kPolylineSegments));
  for (const auto& h : holes_) {
    if (!h.is_closed()) throw DomainError("hole boundary must be a closed curve");
    polylines_.push_back(curve_polyline(h, kPolylineSegments));
  }
}

CompactDomain CompactDomain::disk(cplx center, double radius) {
  return CompactDomain(CubicSpline::circle(center, radius));
}

CompactDomain CompactDomain::annulus(cplx center, double inner_radius, double outer_radius) {
  if (!(inner_radius < outer_radius)) throw DomainError("annulus needs inner radius < outer radius");
  return CompactDomain(CubicSpline::circle(center, outer_radius), {CubicSpline::circle(center, inner_radius)});
}

bool CompactDomain::contains(cplx z) const {
  bool inside = false;
  for (const auto& p : polylines_) {
    for (std::size_t k = 0; k < p.size(); ++k) {
      const cplx a = p[k];
      const cplx b = p[(k + 1) % p.size()];
      if ((a.imag() <= z.imag()) != (b.imag() <= z.imag())) {
        const double x = a.real() + (z.imag() - a.imag()) * (b.real() - a.real()) / (b.imag() - a.imag());
        if (x > z.real()) inside = !inside;
      }
    }
  }
  return inside;
}

Mask CompactDomain::mask(const Grid& grid) const {
  Mask out(grid);
  const int n = grid.size();
  std::vector<double> xs;
  for (int j = 0; j < n; ++j) {
    const double y = grid.node(0, j).imag();
    xs.clear();
    for (const auto& p : polylines_) {
      for (std::size_t k = 0; k < p.size(); ++k) {
        const cplx a = p[k];
        const cplx b = p[(k + 1) % p.size()];
        if ((a.imag() <= y) != (b.imag() <= y)) {
          xs.push_back(a.real() + (y - a.imag()) * (b.real() - a.real()) / (b.imag() - a.imag()));
        }
      }
    }
    std::sort(xs.begin(), xs.end());
    // A node is inside when an odd number of crossings lies strictly to its right.
    for (int i = 0; i < n; ++i) {
      const double x = grid.node(i, j).real();
      const auto right = xs.end() - std::upper_bound(xs.begin(), xs.end(), x);
      if (right % 2 == 1) out.set(i, j, true);
    }
  }
  return out;
}

double CompactDomain::area() const {
  double a = std::abs(shoelace(polylines_[0]));
  for (std::size_t k = 1; k < polylines_.size(); ++k) a -= std::abs(shoelace(polylines_[k]));
  return a;
}

std::pair<double, cplx> CompactDomain::boundary_distance(cplx z) const {
  std::pair<double, cplx> best{std::numeric_limits<double>::infinity(), cplx(1.0, 0.0)};
  for (const auto& p : polylines_) {
    const auto d = polyline_distance(p, z);
    if (d.first < best.first) best = d;
  }
  return best;
}

// ---------------------------------------------------------------- arcs

ArcSamples sample_arc(const JordanArc& arc, double ds) {
  ArcSamples s;
  s.closed = arc.closed();
  s.t = arc.curve().resample(ds);
  for (double t : s.t) {
    s.z.push_back(arc.curve().eval(t));
    s.tangent.push_back(arc.curve().deriv(t));
  }
  return s;
}

Mask rasterize_arc(const JordanArc& arc, const Grid& grid) {
  Mask out(grid);
  const ArcSamples s = sample_arc(arc, grid.spacing() / 8.0);
  const int n = grid.size();
  for (const cplx& z : s.z) {
    if (!grid.contains(z)) continue;
    const auto [u, v] = grid.locate(z);
    const int i = std::clamp(int(std::lround(u)), 0, n - 1);
    const int j = std::clamp(int(std::lround(v)), 0, n - 1);
    out.set(i, j, true);
  }
  return out;
}

Mask AdmissibleSet::k_mask() const {
  Mask m(grid);
  for (const auto& d : domains) m = m | d.mask(grid);
  return m;
}

Mask AdmissibleSet::arc_mask() const {
  Mask m(grid);
  for (const auto& a : arcs) m = m | rasterize_arc(a, grid);
  return m;
}

std::vector<std::vector<std::size_t>> enclosed_components(const Mask& set, const Mask& omega) {
  const Grid& g = set.grid();
  const int n = g.size();
  const Mask free = omega - set;
  std::vector<int> label(g.node_count(), -1);
  std::vector<std::vector<std::size_t>> out;
  int next = 0;
  std::deque<std::pair<int, int>> queue;
  const int di[4] = {1, -1, 0, 0};
  const int dj[4] = {0, 0, 1, -1};
  for (int i0 = 0; i0 < n; ++i0) {
    for (int j0 = 0; j0 < n; ++j0) {
      const std::size_t k0 = g.index(i0, j0);
      if (!free[k0] || label[k0] >= 0) continue;
      std::vector<std::size_t> comp;
      bool reaches_edge = false;
      label[k0] = next;
      queue.emplace_back(i0, j0);
      while (!queue.empty()) {
        const auto [i, j] = queue.front();
        queue.pop_front();
        comp.push_back(g.index(i, j));
        for (int d = 0; d < 4; ++d) {
          const int a = i + di[d];
          const int b = j + dj[d];
          if (a < 0 || b < 0 || a >= n || b >= n) {
            reaches_edge = true;
            continue;
          }
          const std::size_t k = g.index(a, b);
          if (!omega[k]) {
            reaches_edge = true;
            continue;
          }
          if (!free[k] || label[k] >= 0) continue;
          label[k] = next;
          queue.emplace_back(a, b);
        }
      }
      ++next;
      if (!reaches_edge) out.push_back(std::move(comp));
    }
  }
  return out;
}

ValidationReport validate_admissible(const AdmissibleSet& s) {
  ValidationReport r;
  const double h = s.grid.spacing();

  // Simplicity and area of the domains.
  for (std::size_t d = 0; d < s.domains.size(); ++d) {
    const auto& dom = s.domains[d];
    for (std::size_t c = 0; c < dom.polylines().size(); ++c) {
      cplx where;
      if (polyline_self_intersects(dom.polylines()[c], true, &where)) {
        r.simple = false;
        r.messages.push_back("domain " + std::to_string(d) + " boundary curve " + std::to_string(c) +
                             " self-intersects near " + point_text(where));
      }
    }
    for (std::size_t c = 1; c < dom.polylines().size(); ++c) {
      cplx where;
      if (polylines_intersect(dom.polylines()[0], true, dom.polylines()[c], true, &where) ||
          !CompactDomain(dom.outer()).contains(dom.polylines()[c].front())) {
        r.simple = false;
        r.messages.push_back("domain " + std::to_string(d) + " hole " + std::to_string(c - 1) +
                             " is not inside the outer boundary");
      }
    }
    if (!(dom.area() > 0.0)) {
      r.positive_area = false;
      r.messages.push_back("domain " + std::to_string(d) + " has no positive area");
    }
  }

  // Pairwise disjointness of the domains.
  for (std::size_t a = 0; a < s.domains.size(); ++a) {
    for (std::size_t b = a + 1; b < s.domains.size(); ++b) {
      const auto& A = s.domains[a];
      const auto& B = s.domains[b];
      bool meet = A.contains(B.polylines()[0].front()) || B.contains(A.polylines()[0].front());
      cplx where = B.polylines()[0].front();
      for (const auto& pa : A.polylines())
        for (const auto& pb : B.polylines())
          if (!meet && polylines_intersect(pa, true, pb, true, &where)) meet = true;
      if (meet) {
        r.disjoint = false;
        r.messages.push_back("domains " + std::to_string(a) + " and " + std::to_string(b) + " meet near " +
                             point_text(where));
      }
    }
  }

  // Arcs: simplicity, immersion, contact with K only at endpoints, transversality.
  const double attach_tol = 0.5 * h;
  std::vector<std::vector<cplx>> arc_lines;
  for (std::size_t a = 0; a < s.arcs.size(); ++a) {
    const auto& arc = s.arcs[a];
    const ArcSamples smp = sample_arc(arc, h / 2.0);
    arc_lines.push_back(smp.z);
    cplx where;
    if (polyline_self_intersects(smp.z, arc.closed(), &where)) {
      r.simple = false;
      r.messages.push_back("arc " + std::to_string(a) + " self-intersects near " + point_text(where));
    }
    for (std::size_t k = 0; k < smp.z.size(); ++k) {
      if (!(std::abs(smp.tangent[k]) > 1e-12)) {
        r.simple = false;
        r.messages.push_back("arc " + std::to_string(a) + " has a vanishing tangent near " + point_text(smp.z[k]));
        break;
      }
    }
    // Attachments at the endpoints of open arcs.
    std::vector<bool> attached(2, false);
    if (!arc.closed()) {
      for (int end = 0; end < 2; ++end) {
        const cplx p = end == 0 ? smp.z.front() : smp.z.back();
        const cplx tan = end == 0 ? smp.tangent.front() : smp.tangent.back();
        for (std::size_t d = 0; d < s.domains.size(); ++d) {
          const auto [dist, btan] = s.domains[d].boundary_distance(p);
          if (dist > attach_tol) continue;
          attached[std::size_t(end)] = true;
          const double c = std::abs((std::conj(tan) * btan).real()) / std::abs(tan);
          const double angle = std::acos(std::clamp(c, 0.0, 1.0)) * 180.0 / std::numbers::pi;
          r.attachments.push_back({int(a), end, int(d), p, angle});
          if (angle < s.min_angle_deg) {
            r.transversal = false;
            r.messages.push_back("arc " + std::to_string(a) + " meets domain " + std::to_string(d) + " at angle " +
                                 std::to_string(angle) + " deg, below the minimum " +
                                 std::to_string(s.min_angle_deg));
          }
        }
      }
    }
    // Interior samples must avoid K: points within a few cells of an attached
    // endpoint may lie in the contact zone.
    const double skip = 2.0 * h;
    for (std::size_t k = 0; k < smp.z.size(); ++k) {
      const cplx p = smp.z[k];
      if (!arc.closed()) {
        if (attached[0] && std::abs(p - smp.z.front()) < skip) continue;
        if (attached[1] && std::abs(p - smp.z.back()) < skip) continue;
      }
      bool bad = false;
      for (const auto& dom : s.domains) {
        if (dom.contains(p) || dom.boundary_distance(p).first < 0.25 * h) bad = true;
      }
      if (bad) {
        r.arcs_meet_only_at_endpoints = false;
        r.messages.push_back("arc " + std::to_string(a) + " meets K away from its endpoints near " + point_text(p));
        break;
      }
    }
  }
  for (std::size_t a = 0; a < arc_lines.size(); ++a) {
    for (std::size_t b = a + 1; b < arc_lines.size(); ++b) {
      cplx where;
      if (polylines_intersect(arc_lines[a], s.arcs[a].closed(), arc_lines[b], s.arcs[b].closed(), &where)) {
        r.disjoint = false;
        r.messages.push_back("arcs " + std::to_string(a) + " and " + std::to_string(b) + " meet near " +
                             point_text(where));
      }
    }
  }

  const Mask S = s.s_mask();
  if (!S.subset_of(s.omega)) {
    r.inside_omega = false;
    r.messages.push_back("the set is not contained in omega");
  }
  for (const auto& comp : enclosed_components(S, s.omega)) {
    r.runge = false;
    const cplx z = s.grid.node(comp[comp.size() / 2]);
    r.offending_components.push_back(z);
    r.messages.push_back("complement component of " + std::to_string(comp.size()) +
                         " nodes is relatively compact in omega, e.g. at " + point_text(z));
  }
  return r;
}

// ---------------------------------------------------------------- cut-offs and extension

double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t);
  const double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

double CutoffFunction::at(cplx z) const {
  const Grid& g = values.grid();
  const int n = g.size();
  const auto [u, v] = g.locate(z);
  const int i0 = std::clamp(int(std::floor(u)), 0, n - 2);
  const int j0 = std::clamp(int(std::floor(v)), 0, n - 2);
  const double tu = std::clamp(u - i0, 0.0, 1.0);
  const double tv = std::clamp(v - j0, 0.0, 1.0);
  const double r = (1 - tu) * (1 - tv) * values.at(i0, j0).real() + tu * (1 - tv) * values.at(i0 + 1, j0).real() +
                   (1 - tu) * tv * values.at(i0, j0 + 1).real() + tu * tv * values.at(i0 + 1, j0 + 1).real();
  return std::clamp(r, 0.0, 1.0);
}

CutoffFunction make_cutoff(const Mask& inner, const Mask& outer) {
  if (!(inner.grid() == outer.grid())) throw DimensionError("cut-off masks live on different grids");
  if (!inner.subset_of(outer)) throw DomainError("cut-off inner mask must lie inside the outer mask");
  if (inner.empty()) throw DomainError("cut-off inner mask is empty");
  const Grid& g = inner.grid();
  const DistanceField din = distance_to(inner);
  const Mask outside = ~outer;
  CutoffFunction c{inner, outer, GridFunction(g, 1)};
  if (outside.empty()) {
    for (auto& v : c.values.values()) v = 1.0;
    return c;
  }
  const DistanceField dout = distance_to(outside);
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < g.node_count(); ++k)
    if (inner[k]) gap = std::min(gap, dout.distance[k]);
  if (gap < 2.0) {
    throw DomainError("cut-off transition band is thinner than two cells (gap " + std::to_string(gap) + ")");
  }
  for (std::size_t k = 0; k < g.node_count(); ++k) {
    double v;
    if (inner[k]) {
      v = 1.0;
    } else if (!outer[k]) {
      v = 0.0;
    } else {
      const double t = din.distance[k] / (din.distance[k] + dout.distance[k]);
      v = 1.0 - smooth_step(t);
    }
    c.values.values()[k] = v;
  }
  return c;
}

GridFunction extend_smooth(const GridFunction& f, const Mask& from, double collar_cells) {
  if (!(f.grid() == from.grid())) throw DimensionError("extension mask lives on a different grid");
  if (from.empty()) throw DomainError("extension source mask is empty");
  const Grid& g = f.grid();
  const DistanceField df = distance_to(from);
  GridFunction out(g, f.dim());
  for (std::size_t k = 0; k < g.node_count(); ++k) {
    const double d = df.distance[k];
    if (d >= collar_cells) continue;
    const double weight = d == 0.0 ? 1.0 : 1.0 - smooth_step(d / collar_cells);
    const auto src = f.node(df.nearest[k]);
    auto dst = out.node(k);
    for (std::size_t c = 0; c < src.size(); ++c) dst[c] = weight * src[c];
  }
  return out;
}

}  // namespace pascali
