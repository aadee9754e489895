#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "pascali/grid.hpp"
#include "pascali/operator.hpp"
#include "pascali/spline.hpp"

namespace pascali {

/// Compact domain bounded by a closed spline, optionally with holes (closed
/// splines inside it). Membership is even-odd over all boundary curves.
class CompactDomain {
 public:
  explicit CompactDomain(CubicSpline outer, std::vector<CubicSpline> holes = {});
  static CompactDomain disk(cplx center, double radius);
  static CompactDomain annulus(cplx center, double inner_radius, double outer_radius);

  const CubicSpline& outer() const { return outer_; }
  const std::vector<CubicSpline>& holes() const { return holes_; }

  /// Fine polylines (one per boundary curve) used for membership and tests.
  const std::vector<std::vector<cplx>>& polylines() const { return polylines_; }

  bool contains(cplx z) const;
  /// Scanline rasterization: nodes whose centre lies inside.
  Mask mask(const Grid& grid) const;
  double area() const;
  /// Distance from z to the nearest boundary curve, with the unit tangent there.
  std::pair<double, cplx> boundary_distance(cplx z) const;

 private:
  CubicSpline outer_;
  std::vector<CubicSpline> holes_;
  std::vector<std::vector<cplx>> polylines_;
};

/// Smooth Jordan arc (open spline) or closed Jordan curve (closed spline).
class JordanArc {
 public:
  explicit JordanArc(CubicSpline curve) : curve_(std::move(curve)) {}
  static JordanArc segment(cplx a, cplx b) { return JordanArc(CubicSpline::open({a, b})); }

  const CubicSpline& curve() const { return curve_; }
  bool closed() const { return curve_.is_closed(); }

 private:
  CubicSpline curve_;
};

/// Samples of an arc at near-uniform arc-length spacing.
struct ArcSamples {
  std::vector<double> t;      // spline parameters
  std::vector<cplx> z;        // points
  std::vector<cplx> tangent;  // gamma'(t)
  bool closed = false;
};

ArcSamples sample_arc(const JordanArc& arc, double ds);

/// Nodes whose cell contains an arc sample; sampling at h/8 makes the
/// raster an 8-connected barrier.
Mask rasterize_arc(const JordanArc& arc, const Grid& grid);

struct AdmissibleSet {
  std::vector<CompactDomain> domains;
  std::vector<JordanArc> arcs;
  Grid grid;
  Mask omega;  // ambient open set; the whole box when not restricted
  double min_angle_deg = 15.0;

  AdmissibleSet(Grid g) : grid(g), omega(g, true) {}

  Mask k_mask() const;
  Mask arc_mask() const;
  Mask s_mask() const { return k_mask() | arc_mask(); }
};

struct Attachment {
  int arc = 0;
  int end = 0;     // 0: start, 1: end
  int domain = 0;
  cplx point;
  double angle_deg = 0.0;
};

struct ValidationReport {
  bool simple = true;
  bool positive_area = true;
  bool disjoint = true;
  bool arcs_meet_only_at_endpoints = true;
  bool transversal = true;
  bool inside_omega = true;
  bool runge = true;
  std::vector<Attachment> attachments;
  std::vector<cplx> offending_components;  // one point per relatively compact component
  std::vector<std::string> messages;

  bool ok() const {
    return simple && positive_area && disjoint && arcs_meet_only_at_endpoints && transversal && inside_omega && runge;
  }
};

ValidationReport validate_admissible(const AdmissibleSet& s);

/// Points of the complement (omega minus set) lying in 4-connected components
/// that do not reach the edge of omega; empty when the set is Runge in omega.
std::vector<std::vector<std::size_t>> enclosed_components(const Mask& set, const Mask& omega);

struct CutoffFunction {
  Mask inner;
  Mask outer;
  GridFunction values;  // scalar, in [0, 1]

  double at(cplx z) const;  // bilinear, clamped to [0, 1]
};

/// Smooth step S on [0, 1]: S(t) = psi(t) / (psi(t) + psi(1 - t)), psi(t) = e^{-1/t}.
double smooth_step(double t);

/// 1 on inner, 0 off outer, 1 - S(d_in / (d_in + d_out)) in between.
/// Requires inner to stay two cells inside outer.
CutoffFunction make_cutoff(const Mask& inner, const Mask& outer);

/// f on `from`; elsewhere f(nearest point of from) * (1 - S(dist / collar)).
GridFunction extend_smooth(const GridFunction& f, const Mask& from, double collar_cells = 10.0);

class ArcExtensionImpl;

/// Extension F of data along an arc that solves the system on the arc.
struct ArcExtension {
  Mask tube;
  GridFunction F;       // zero outside the tube
  double radius = 0.0;  // tube half-width (absolute units)
  int pieces = 0;
  double weight_defect = 0.0;  // max |sum of piece weights - 1| on the tube
  std::shared_ptr<const ArcExtensionImpl> impl;

  /// Closed-form evaluation at any point of the tube.
  void evaluate(cplx z, std::span<cplx> out) const;
  /// Piece weights at z (for partition-of-unity checks).
  std::vector<double> weights(cplx z) const;
  /// |dbar_B F| at z via centred differences of the closed form with step delta.
  double pointwise_residual(cplx z, double delta) const;
  /// True past the ends of an open arc, where F is only a Taylor continuation.
  bool beyond_end(cplx z) const;
};

/// f_values holds n entries per sample of `samples`. radius <= 0 picks the
/// largest half-width up to 8 cells allowed by the curve's reach.
ArcExtension arc_extend(const JordanArc& arc, const ArcSamples& samples, const std::vector<cplx>& f_values,
                        const CoefficientField& coeff, double radius = 0.0);

}  // namespace pascali
