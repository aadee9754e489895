#include "pascali/approx.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>

#include "pascali/errors.hpp"

namespace pascali {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::vector<cplx> interp_at(const GridFunction& w, cplx z) {
  std::vector<cplx> out(static_cast<std::size_t>(w.dim()));
  interpolate(w, z, out);
  return out;
}

double vec_dist(std::span<const cplx> a, std::span<const cplx> b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) s += std::norm(a[c] - b[c]);
  return std::sqrt(s);
}

bool box_margin_ok(const Mask& omega, const Mask& D, double cells) { return omega.dilated(cells).subset_of(D); }

// Node of the grid closest to z.
std::size_t nearest_node(const Grid& g, cplx z) {
  const auto [u, v] = g.locate(z);
  const int i = std::clamp(int(std::lround(u)), 0, g.size() - 1);
  const int j = std::clamp(int(std::lround(v)), 0, g.size() - 1);
  return g.index(i, j);
}

}  // namespace

double ApproximationReport::chain_sum() const {
  double s = 0.0;
  for (const auto& st : stages)
    if (st.chain) s += st.error;
  return s;
}

PascaliSolver solver_near(const PascaliSolver& solver, const Mask& omega) {
  if (!box_margin_ok(omega, solver.domain(), 11.0)) {
    throw DomainError("correction domain must stay 11 cells inside the solve domain D");
  }
  const Mask D = omega.dilated(12.0) & solver.domain();
  return PascaliSolver(solver.coeff(), CauchyGreenOperator(solver.grid(), D), solver.options());
}

LocalMergelyanResult local_mergelyan(const PascaliSolver& solver, const Mask& K, const GridFunction& f, double eps,
                                     int start_offset, int floor_offset, double collar_cells) {
  if (!(K.grid() == solver.grid()) || !(f.grid() == solver.grid())) throw DimensionError("local_mergelyan: grid mismatch");
  if (f.dim() != solver.coeff().dim()) throw DimensionError("local_mergelyan: dimension mismatch");
  if (K.empty()) throw DomainError("local_mergelyan: empty compact set");
  if (!(eps > 0.0)) throw DomainError("local_mergelyan: eps must be positive");
  if (floor_offset < 1 || start_offset < floor_offset) throw DomainError("local_mergelyan: need start >= floor >= 1");
  double best = kInf;
  std::string skipped;
  int offset = start_offset;
  while (true) {
    const Mask U = K.dilated(double(offset));
    if (box_margin_ok(U, solver.domain(), 11.0)) {
      const PascaliSolver local = solver_near(solver, U);
      const CorrectionResult cr = local.correct_to_solution(f, U, collar_cells);
      const double err = sup_norm(f - cr.w, K);
      best = std::min(best, err);
      if (err <= eps / 2.0) return {U, cr.w, err, offset, cr.stats.iterations};
    } else {
      skipped += " " + std::to_string(offset);
    }
    if (offset == floor_offset) break;
    offset = std::max(floor_offset, offset / 2);
  }
  std::string msg = "no neighbourhood down to " + std::to_string(floor_offset) + " cells brings the error below " +
                    fmt_num(eps / 2.0) + " (best " + fmt_num(best) + ")";
  if (!skipped.empty()) msg += "; offsets too close to the edge of D:" + skipped;
  throw StageError("local", best, msg);
}

std::vector<ArcData> sample_arc_targets(const AdmissibleSet& S, int dim, const PointFunction& fn) {
  std::vector<ArcData> out;
  const double ds = S.grid.spacing() / 8.0;
  for (const auto& arc : S.arcs) {
    ArcData d{sample_arc(arc, ds), {}};
    d.values.resize(d.samples.z.size() * std::size_t(dim));
    for (std::size_t s = 0; s < d.samples.z.size(); ++s) {
      fn(d.samples.z[s], std::span<cplx>(d.values.data() + s * std::size_t(dim), std::size_t(dim)));
    }
    out.push_back(std::move(d));
  }
  return out;
}

MergelyanResult mergelyan(const PascaliSolver& solver, const AdmissibleSet& S, const GridFunction& f_dom,
                          const std::vector<ArcData>& f_arcs, double eps, const MergelyanOptions& opt) {
  const Grid& grid = solver.grid();
  const CoefficientField& coeff = solver.coeff();
  const int n = coeff.dim();
  const auto nd = std::size_t(n);
  if (!(S.grid == grid) || !(f_dom.grid() == grid)) throw DimensionError("mergelyan: grid mismatch");
  if (f_dom.dim() != n) throw DimensionError("mergelyan: dimension mismatch");
  if (!(eps > 0.0)) throw DomainError("mergelyan: eps must be positive");
  if (f_arcs.size() != S.arcs.size()) throw DimensionError("mergelyan: one data set per arc expected");
  for (const auto& a : f_arcs) {
    if (a.values.size() != a.samples.z.size() * nd) throw DimensionError("mergelyan: n values per arc sample expected");
  }
  const ValidationReport valid = validate_admissible(S);
  if (!valid.ok()) {
    std::string msg = "set is not admissible";
    for (const auto& m : valid.messages) msg += "; " + m;
    throw DomainError(msg);
  }

  const Mask K = S.k_mask();
  const Mask Smask = S.s_mask();
  const bool has_k = !K.empty();
  const bool has_arcs = !S.arcs.empty();
  if (!has_k && !has_arcs) throw DomainError("mergelyan: empty set");

  MergelyanResult res{GridFunction(grid, n), Mask(grid), {}};
  ApproximationReport& rep = res.report;
  rep.target = std::to_string(S.domains.size()) + " domain(s), " + std::to_string(S.arcs.size()) + " arc(s)";

  // Arc data after the first gluing; starts as f.
  std::vector<std::vector<cplx>> h_arcs;
  for (const auto& a : f_arcs) h_arcs.push_back(a.values);

  GridFunction g(grid, n);
  Mask U(grid), U1(grid), U2(grid), U3(grid);
  double e_glue = 0.0;

  // (1) local step on K.
  if (has_k) {
    // The gluing below needs three nested neighbourhoods inside U, so U must
    // be at least 8 cells wide.
    const LocalMergelyanResult loc =
        local_mergelyan(solver, K, f_dom, eps / 2.0, std::max(opt.start_offset, 8), 8, 10.0);
    g = loc.w;
    U = loc.U;
    rep.iterations += loc.iterations;
    rep.stages.push_back({"local", eps / 4.0, loc.error, false, "offset " + std::to_string(loc.offset) + " cells"});
    e_glue = loc.error;

    if (has_arcs) {
      // (2) neighbourhoods K + off3 in U3, U2, U1 with |f - g| < eps/2 on E n U1.
      const int gap = std::max(2, loc.offset / 4);
      double best = kInf;
      bool found = false;
      for (int off1 = loc.offset - 1; off1 >= 2 * gap + 2; --off1) {
        const Mask u1 = K.dilated(double(off1));
        double err = 0.0;
        for (std::size_t a = 0; a < f_arcs.size(); ++a) {
          const auto& smp = f_arcs[a].samples;
          for (std::size_t s = 0; s < smp.z.size(); ++s) {
            if (!u1[nearest_node(grid, smp.z[s])]) continue;
            const auto gv = interp_at(g, smp.z[s]);
            err = std::max(err, vec_dist(gv, std::span<const cplx>(f_arcs[a].values.data() + s * nd, nd)));
          }
        }
        best = std::min(best, err);
        if (err < eps / 2.0) {
          U1 = u1;
          U2 = K.dilated(double(off1 - gap));
          U3 = K.dilated(double(off1 - 2 * gap));
          rep.stages.push_back({"neighbourhood", eps / 2.0, err, false,
                                "U1 = K + " + std::to_string(off1) + " cells, gap " + std::to_string(gap)});
          e_glue = std::max(e_glue, err);
          found = true;
          break;
        }
      }
      if (!found) {
        throw StageError("neighbourhood", best,
                         "no neighbourhood of K keeps |f - g| below " + fmt_num(eps / 2.0) + " on the arcs");
      }
      // (3) first gluing h = cutoff1 g + (1 - cutoff1) f along the arcs.
      const CutoffFunction c1 = make_cutoff(U2, U1);
      for (std::size_t a = 0; a < f_arcs.size(); ++a) {
        const auto& smp = f_arcs[a].samples;
        for (std::size_t s = 0; s < smp.z.size(); ++s) {
          const double phi = c1.at(smp.z[s]);
          if (phi == 0.0) continue;
          const auto gv = interp_at(g, smp.z[s]);
          for (std::size_t c = 0; c < nd; ++c) {
            cplx& hv = h_arcs[a][s * nd + c];
            hv = phi * gv[c] + (1.0 - phi) * hv;
          }
        }
      }
    }
  }

  // (4) arc extensions and (5) second gluing into H on W.
  GridFunction H(grid, n);
  Mask W(grid);
  if (has_arcs) {
    std::vector<ArcExtension> ext;
    std::vector<Mask> tubes;
    Mask V(grid);      // where H is defined through F
    Mask Vglue(grid);  // the part of V inside W
    for (std::size_t a = 0; a < S.arcs.size(); ++a) {
      ext.push_back(arc_extend(S.arcs[a], f_arcs[a].samples, h_arcs[a], coeff));
      // The glued region stops at the end cross-sections of open arcs.
      Mask trimmed = ext.back().tube;
      for (std::size_t k : trimmed.indices())
        if (ext.back().beyond_end(grid.node(k))) trimmed.set(k, false);
      V = V | ext.back().tube;
      Vglue = Vglue | trimmed;
      tubes.push_back(ext.back().tube);
    }
    // Where tubes overlap, the closest arc wins.
    std::vector<DistanceField> dist;
    if (ext.size() > 1)
      for (const auto& arc : S.arcs) dist.push_back(distance_to(rasterize_arc(arc, grid)));
    auto F_at = [&](std::size_t k) -> std::span<const cplx> {
      std::size_t best = 0;
      double bd = kInf;
      for (std::size_t a = 0; a < ext.size(); ++a) {
        if (!tubes[a][k]) continue;
        const double d = dist.empty() ? 0.0 : dist[a].distance[k];
        if (d < bd) {
          bd = d;
          best = a;
        }
      }
      return ext[best].F.node(k);
    };
    std::optional<CutoffFunction> c2;
    if (has_k) c2 = make_cutoff(U3, U2);
    for (std::size_t k = 0; k < grid.node_count(); ++k) {
      auto out = H.node(k);
      if (has_k && U3[k]) {
        std::copy(g.node(k).begin(), g.node(k).end(), out.begin());
      } else if (has_k && U2[k]) {
        if (V[k]) {
          const double phi = c2->values.values()[k].real();
          const auto F = F_at(k);
          const auto gv = g.node(k);
          for (std::size_t c = 0; c < nd; ++c) out[c] = phi * gv[c] + (1.0 - phi) * F[c];
        } else {
          std::copy(g.node(k).begin(), g.node(k).end(), out.begin());
        }
      } else if (V[k]) {
        const auto F = F_at(k);
        std::copy(F.begin(), F.end(), out.begin());
      } else if (has_k && U[k]) {
        std::copy(g.node(k).begin(), g.node(k).end(), out.begin());
      }
    }
    W = has_k ? (U3 | Vglue) : Vglue;
    double pieces = 0;
    for (const auto& e : ext) pieces += e.pieces;
    rep.stages.push_back({"extend", 0.0, 0.0, false,
                          std::to_string(int(pieces)) + " graph piece(s), tube radius " + fmt_num(ext.front().radius)});
  } else {
    H = g;
    W = U;
  }

  // Error of H against f on S: H = g on K, H = h on the arcs.
  {
    double err = 0.0;
    if (has_k)
      for (std::size_t k : K.indices()) err = std::max(err, vec_dist(H.node(k), f_dom.node(k)));
    for (std::size_t a = 0; a < f_arcs.size(); ++a)
      for (std::size_t s = 0; s < f_arcs[a].samples.z.size(); ++s)
        err = std::max(err, vec_dist(std::span<const cplx>(h_arcs[a].data() + s * nd, nd),
                                     std::span<const cplx>(f_arcs[a].values.data() + s * nd, nd)));
    e_glue = err;
    rep.stages.push_back({"glue", eps / 2.0, err, true, "sup |H - f| on S"});
  }
  // dbar_B(H) at S nodes, relative to the size of H there.
  {
    const Mask check = Smask & W.eroded(1);
    if (!check.empty()) {
      const GridFunction r = dbar_B(coeff, H);
      double rmax = 0.0;
      double scale = 1.0;
      for (std::size_t k : check.indices()) {
        rmax = std::max(rmax, r.norm_at(k));
        scale = std::max(scale, H.norm_at(k));
      }
      const double rel = rmax / scale;
      rep.stages.push_back({"glue_residual", opt.glue_tol, rel, false,
                            "sup |dbar_B H| / max(1, sup |H|) at S nodes, absolute " + fmt_num(rmax)});
      if (rel > opt.glue_tol) {
        throw StageError("glue_residual", rel, "glued function is not a solution on S (relative residual " +
                                                   fmt_num(rel) + ")");
      }
    }
  }

  // S samples: the nodes of K and the arc samples.
  auto error_on_S = [&](const GridFunction& w, const GridFunction& ref_dom,
                        const std::vector<std::vector<cplx>>& ref_arcs) {
    double err = 0.0;
    if (has_k)
      for (std::size_t k : K.indices()) err = std::max(err, vec_dist(w.node(k), ref_dom.node(k)));
    for (std::size_t a = 0; a < f_arcs.size(); ++a) {
      const auto& smp = f_arcs[a].samples;
      for (std::size_t s = 0; s < smp.z.size(); ++s) {
        err = std::max(err, vec_dist(interp_at(w, smp.z[s]), std::span<const cplx>(ref_arcs[a].data() + s * nd, nd)));
      }
    }
    return err;
  };

  // (6) correction on dilations of S inside W.
  const double budget_corr = std::max(eps / 4.0, eps - e_glue - eps / 4.0);
  GridFunction wm(grid, n);
  double e_corr = kInf;
  {
    double best = kInf;
    bool found = false;
    const Mask inner_W = W.eroded(2);
    int offset = opt.start_offset;
    while (true) {
      const Mask omega = Smask.dilated(double(offset)) & inner_W;
      if (!omega.empty() && box_margin_ok(omega, solver.domain(), 11.0)) {
        const PascaliSolver local = solver_near(solver, omega);
        const CorrectionResult cr = local.correct_to_solution(H, omega, opt.correction_collar);
        rep.iterations += cr.stats.iterations;
        const double err = error_on_S(cr.w, H, h_arcs);
        best = std::min(best, err);
        if (err <= budget_corr) {
          wm = cr.w;
          e_corr = err;
          rep.stages.push_back({"correct", budget_corr, err, true,
                                "offset " + std::to_string(offset) + " cells, achieved residual " +
                                    fmt_num(cr.achieved_residual)});
          found = true;
          break;
        }
      }
      if (offset == 2) break;
      offset = std::max(2, offset / 2);
    }
    if (!found) {
      throw StageError("correct", best,
                       "no neighbourhood of S down to 2 cells brings the correction below " + fmt_num(budget_corr));
    }
  }

  // (7) Runge fit by formal powers.
  std::optional<FormalPowerBasis> own;
  const FormalPowerBasis* basis = opt.basis;
  if (!basis) {
    bool built = false;
    for (int off : {16, 8, 4}) {
      const Mask Ub = Smask.dilated(double(off));
      if (!box_margin_ok(Ub, solver.domain(), 11.0)) continue;
      own.emplace(solver.build_formal_powers(Ub, opt.degree));
      built = true;
      break;
    }
    if (!built) throw DomainError("mergelyan: S is too close to the edge of D for a basis domain");
    basis = &*own;
  }
  if (!Smask.subset_of(basis->domain)) throw DomainError("mergelyan: the basis domain must contain S");
  std::vector<cplx> pts;
  std::vector<cplx> vals;
  if (has_k) {
    for (std::size_t k : K.indices()) {
      pts.push_back(grid.node(k));
      for (const cplx& v : wm.node(k)) vals.push_back(v);
    }
  }
  for (const auto& a : f_arcs) {
    for (cplx z : a.samples.z) {
      pts.push_back(z);
      for (const cplx& v : interp_at(wm, z)) vals.push_back(v);
    }
  }
  const RungeResult rr = runge_approximate_points(*basis, pts, vals, opt.lambda);
  rep.warnings.insert(rep.warnings.end(), rr.warnings.begin(), rr.warnings.end());
  const double budget_runge = eps - e_glue - e_corr;
  rep.stages.push_back({"runge", budget_runge, rr.err, true,
                        std::to_string(basis->members.size()) + " members, degree " +
                            std::to_string(basis->degree_max)});
  if (!(rr.err <= budget_runge)) {
    throw StageError("runge", rr.err, "formal-power fit misses its budget " + fmt_num(budget_runge));
  }

  res.w = rr.w;
  res.domain = basis->domain;
  std::vector<std::vector<cplx>> f_vals;
  for (const auto& a : f_arcs) f_vals.push_back(a.values);
  rep.error = error_on_S(res.w, f_dom, f_vals);
  Mask rd = res.domain.eroded(2);
  if (rd.empty()) rd = res.domain;
  rep.residual = sup_norm(dbar_B(coeff, res.w), rd);
  rep.residual_scale = std::max(1.0, sup_norm(res.w, rd));
  rep.residual_domain = "basis domain eroded by 2 cells";
  if (!(rep.error <= eps)) {
    throw StageError("final", rep.error, "final error " + fmt_num(rep.error) + " exceeds eps " + fmt_num(eps));
  }
  return res;
}

// ---------------------------------------------------------------- Carleman

CarlemanSchedule CarlemanSchedule::build(const Grid& grid, const expr::Expr& eps_expr, int m_max,
                                         const std::vector<double>& line_t) {
  if (m_max < 1) throw DomainError("carleman window m_max must be >= 1");
  if (!eps_expr.is_scalar()) throw DimensionError("eps must be a scalar expression");
  CarlemanSchedule s;
  s.m_max = m_max;
  auto eval = [&](cplx z) {
    const cplx v = eps_expr.eval_scalar(z);
    if (!std::isfinite(v.real()) || !(v.real() > 0.0) || std::abs(v.imag()) > 1e-12 * std::abs(v.real())) {
      throw DomainError("eps must be real and positive; eps(" + fmt_num(z.real()) + " + " + fmt_num(z.imag()) +
                        "i) = " + fmt_num(v.real()) + " + " + fmt_num(v.imag()) + "i");
    }
    return v.real();
  };
  for (int m = 0; m <= m_max; ++m) {
    const double R = m + 2.0;
    double e = kInf;
    for (std::size_t k = 0; k < grid.node_count(); ++k)
      if (std::abs(grid.node(k)) <= R) e = std::min(e, eval(grid.node(k)));
    for (double t : line_t)
      if (std::abs(t) <= R) e = std::min(e, eval(cplx(t, 0.0)));
    s.eps.push_back(e);
  }
  return s;
}

AdmissibleSet CarlemanSchedule::S(const Grid& grid, int m) const {
  AdmissibleSet out(grid);
  if (m == 0) {
    out.arcs.push_back(JordanArc::segment(-2.0, 2.0));
    return out;
  }
  out.domains.push_back(CompactDomain::disk(0.0, double(m)));
  out.arcs.push_back(JordanArc::segment(-double(m), -double(m) - 2.0));
  out.arcs.push_back(JordanArc::segment(double(m), double(m) + 2.0));
  return out;
}

Mask CarlemanSchedule::omega(const Grid& grid, int m) { return Mask::disk(grid, 0.0, m + 1.0 / 3.0); }

double CarlemanSchedule::cutoff(int m, cplx z) { return 1.0 - smooth_step(3.0 * (std::abs(z) - (m + 1.0 / 3.0))); }

CarlemanResult carleman(const PascaliSolver& solver, const LineFunction& f, const expr::Expr& eps_expr, int m_max,
                        const CarlemanOptions& opt) {
  const Grid& grid = solver.grid();
  const CoefficientField& coeff = solver.coeff();
  const int n = coeff.dim();
  const auto nd = std::size_t(n);
  const double h = grid.spacing();
  if (m_max < 1) throw DomainError("carleman window m_max must be >= 1");
  {
    const double R = m_max + 1.0 + 1.0 / 3.0;
    const cplx c = grid.center();
    const double a = grid.half_width();
    if (std::abs(c.real()) + R > a || std::abs(c.imag()) + R > a) {
      throw DomainError("grid must cover the disk of radius " + fmt_num(R) + " around 0");
    }
  }

  std::vector<double> sched_t;
  for (double t = -(m_max + 2.0); t <= m_max + 2.0 + 1e-12; t += h / 8.0)
    if (grid.contains(cplx(t, 0.0))) sched_t.push_back(t);

  CarlemanResult res{GridFunction(grid, n), CarlemanSchedule::omega(grid, m_max), {}, {}, {}, {}, {}, false, {}};
  res.schedule = CarlemanSchedule::build(grid, eps_expr, m_max, sched_t);

  // Basis on the largest disk that keeps 11 cells inside D.
  double Rb = m_max + 1.0 + 1.0 / 3.0;
  while (Rb >= m_max + 1.0 + 3.0 * h && !box_margin_ok(Mask::disk(grid, 0.0, Rb), solver.domain(), 11.0)) Rb -= h;
  if (Rb < m_max + 1.0 + 3.0 * h) {
    throw DomainError("solve domain D is too small for the window: need a disk of radius " +
                      fmt_num(m_max + 1.0 + 3.0 * h) + " 11 cells inside D");
  }
  const FormalPowerBasis basis = solver.build_formal_powers(Mask::disk(grid, 0.0, Rb), opt.degree);
  res.report.warnings = basis.warnings;

  std::vector<GridFunction> gs;
  // f_k on the line: f_0 = f, f_k = cutoff_k g_k + (1 - cutoff_k) f_{k-1}.
  auto f_line = [&](double t, int k, std::span<cplx> out) {
    f(t, out);
    for (int j = 1; j <= k; ++j) {
      const double phi = CarlemanSchedule::cutoff(j, t);
      if (phi == 0.0) continue;
      const auto gv = interp_at(gs[std::size_t(j - 1)], t);
      for (std::size_t c = 0; c < nd; ++c) out[c] = phi * gv[c] + (1.0 - phi) * out[c];
    }
  };

  GridFunction f_prev(grid, n);  // f_0 on the grid: only its line values matter
  MergelyanOptions mopt = opt.mergelyan;
  mopt.basis = &basis;
  for (int m = 1; m <= m_max; ++m) {
    const double eps_prev = res.schedule.eps[std::size_t(m - 1)];
    const double bound = eps_prev / std::ldexp(1.0, m + 1);
    const AdmissibleSet S = res.schedule.S(grid, m - 1);
    std::vector<ArcData> arcs = sample_arc_targets(S, n, [&](cplx z, std::span<cplx> out) { f_line(z.real(), m - 1, out); });
    MergelyanResult mr = [&] {
      try {
        return mergelyan(solver, S, f_prev, arcs, bound, mopt);
      } catch (const StageError& e) {
        throw StageError("carleman m=" + std::to_string(m) + " " + e.stage(), e.best_error(), e.what());
      }
    }();
    gs.push_back(mr.w);
    GridFunction f_next = f_prev;
    for (std::size_t k = 0; k < grid.node_count(); ++k) {
      const double phi = CarlemanSchedule::cutoff(m, grid.node(k));
      if (phi == 0.0) continue;
      auto dst = f_next.node(k);
      const auto gv = mr.w.node(k);
      for (std::size_t c = 0; c < nd; ++c) dst[c] = phi * gv[c] + (1.0 - phi) * dst[c];
    }
    // Property iii on the samples of S_{m-1}.
    double step = 0.0;
    for (std::size_t k : S.k_mask().indices()) step = std::max(step, vec_dist(f_next.node(k), f_prev.node(k)));
    std::vector<cplx> a(nd), b(nd);
    for (const auto& arc : arcs) {
      for (cplx z : arc.samples.z) {
        f_line(z.real(), m, a);
        f_line(z.real(), m - 1, b);
        step = std::max(step, vec_dist(a, b));
      }
    }
    CarlemanStage st{m, eps_prev, bound, step, res.schedule.eps[std::size_t(m)] / std::ldexp(1.0, m + 1),
                     mr.report};
    res.report.iterations += mr.report.iterations;
    res.report.stages.push_back({"carleman m=" + std::to_string(m), bound, step, true,
                                 "sup over S_" + std::to_string(m - 1) + " of |f_m - f_{m-1}|"});
    res.stages.push_back(std::move(st));
    if (!(step <= bound)) {
      throw StageError("carleman m=" + std::to_string(m), step,
                       "increment " + fmt_num(step) + " exceeds " + fmt_num(bound));
    }
    f_prev = std::move(f_next);
  }

  res.w = f_prev;
  res.final_check = true;
  std::vector<cplx> fv(nd);
  double worst = 0.0;
  for (double t : sched_t) {
    if (std::abs(t) > m_max) continue;
    f(t, fv);
    const double err = vec_dist(interp_at(res.w, t), fv);
    const double e = eps_expr.eval_scalar(t).real();
    res.line_t.push_back(t);
    res.line_error.push_back(err);
    res.line_eps.push_back(e);
    worst = std::max(worst, err);
    if (!(err < e)) res.final_check = false;
  }
  ApproximationReport& rep = res.report;
  rep.target = "real line |t| <= " + std::to_string(m_max);
  rep.error = worst;
  Mask rd = res.domain.eroded(2);
  rep.residual = sup_norm(dbar_B(coeff, res.w), rd);
  rep.residual_scale = std::max(1.0, sup_norm(res.w, rd));
  rep.residual_domain = "Omega_" + std::to_string(m_max) + " eroded by 2 cells";
  return res;
}

}  // namespace pascali
