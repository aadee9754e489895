#include "pascali/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include "pascali/approx.hpp"
#include "pascali/report_io.hpp"

namespace pascali::scenario {

using nlohmann::json;

std::string task_name(Task t) {
  switch (t) {
    case Task::Solve: return "solve";
    case Task::Correct: return "correct";
    case Task::Runge: return "runge";
    case Task::Mergelyan: return "mergelyan";
    case Task::Carleman: return "carleman";
    case Task::Validate: return "validate";
  }
  return "?";
}

namespace {

// ------------------------------------------------------------ schema helpers

std::string join(const std::string& path, const std::string& key) { return path + "/" + key; }

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  require_object(j, path);
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) {
      std::string list;
      for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
      throw ConfigError(join(path, it.key()), "unknown key (allowed: " + list + ")");
    }
  }
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "expected a finite number");
  return v;
}

int as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  const auto v = j.get<long long>();
  if (v < -1000000000LL || v > 1000000000LL) throw ConfigError(path, "integer out of range");
  return int(v);
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw ConfigError(path, "expected true or false");
  return j.get<bool>();
}

cplx as_point(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(path, "expected a point [x, y]");
  return {as_number(j[0], path + "/0"), as_number(j[1], path + "/1")};
}

std::vector<cplx> as_points(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected a list of points");
  std::vector<cplx> pts;
  for (std::size_t k = 0; k < j.size(); ++k) pts.push_back(as_point(j[k], path + "/" + std::to_string(k)));
  return pts;
}

double positive(double v, const std::string& path) {
  if (!(v > 0.0)) throw ConfigError(path, "must be positive");
  return v;
}

ShapeSpec parse_shape(const json& j, const std::string& path) {
  check_keys(j, path, {"disk", "annulus", "spline"});
  if (j.size() != 1) throw ConfigError(path, "exactly one of disk, annulus, spline expected");
  ShapeSpec s;
  if (j.contains("disk")) {
    const std::string p = join(path, "disk");
    const json& d = j["disk"];
    check_keys(d, p, {"center", "radius"});
    s.kind = "disk";
    if (d.contains("center")) s.center = as_point(d["center"], join(p, "center"));
    if (!d.contains("radius")) throw ConfigError(join(p, "radius"), "missing");
    s.radius = positive(as_number(d["radius"], join(p, "radius")), join(p, "radius"));
  } else if (j.contains("annulus")) {
    const std::string p = join(path, "annulus");
    const json& d = j["annulus"];
    check_keys(d, p, {"center", "inner", "outer"});
    s.kind = "annulus";
    if (d.contains("center")) s.center = as_point(d["center"], join(p, "center"));
    if (!d.contains("inner")) throw ConfigError(join(p, "inner"), "missing");
    if (!d.contains("outer")) throw ConfigError(join(p, "outer"), "missing");
    s.inner = positive(as_number(d["inner"], join(p, "inner")), join(p, "inner"));
    s.radius = positive(as_number(d["outer"], join(p, "outer")), join(p, "outer"));
    if (!(s.inner < s.radius)) throw ConfigError(join(p, "inner"), "must be smaller than outer");
  } else {
    const std::string p = join(path, "spline");
    const json& d = j["spline"];
    check_keys(d, p, {"points", "holes"});
    s.kind = "points";
    if (!d.contains("points")) throw ConfigError(join(p, "points"), "missing");
    s.points = as_points(d["points"], join(p, "points"));
    if (s.points.size() < 3) throw ConfigError(join(p, "points"), "a closed spline needs at least 3 points");
    if (d.contains("holes")) {
      const json& hs = d["holes"];
      if (!hs.is_array()) throw ConfigError(join(p, "holes"), "expected a list of point lists");
      for (std::size_t k = 0; k < hs.size(); ++k) {
        const std::string hp = join(p, "holes") + "/" + std::to_string(k);
        s.holes.push_back(as_points(hs[k], hp));
        if (s.holes.back().size() < 3) throw ConfigError(hp, "a closed spline needs at least 3 points");
      }
    }
  }
  return s;
}

ArcSpec parse_arc(const json& j, const std::string& path) {
  check_keys(j, path, {"points", "closed"});
  ArcSpec a;
  if (!j.contains("points")) throw ConfigError(join(path, "points"), "missing");
  a.points = as_points(j["points"], join(path, "points"));
  if (j.contains("closed")) a.closed = as_bool(j["closed"], join(path, "closed"));
  if (a.points.size() < (a.closed ? 3u : 2u)) throw ConfigError(join(path, "points"), "too few control points");
  return a;
}

Task parse_task(const std::string& s, const std::string& path) {
  for (Task t : {Task::Solve, Task::Correct, Task::Runge, Task::Mergelyan, Task::Carleman, Task::Validate})
    if (task_name(t) == s) return t;
  throw ConfigError(path, "unknown task '" + s + "' (expected solve, correct, runge, mergelyan, carleman, validate)");
}

// ------------------------------------------------------------ runtime helpers

Grid make_grid(const ScenarioConfig& cfg) { return Grid(cfg.center, cfg.half_width, cfg.resolution); }

Mask solve_domain_mask(const ScenarioConfig& cfg, const Grid& grid) {
  if (cfg.solve_domain) return cfg.solve_domain->build().mask(grid);
  return Mask::disk(grid, grid.center(), grid.half_width() - 2.0 * grid.spacing());
}

AdmissibleSet make_set(const ScenarioConfig& cfg, const Grid& grid) {
  AdmissibleSet S(grid);
  for (const auto& d : cfg.domains) S.domains.push_back(d.build());
  for (const auto& a : cfg.arcs) S.arcs.push_back(a.build());
  S.min_angle_deg = cfg.min_angle_deg;
  return S;
}

expr::Expr parse_expr(const std::string& text, const std::string& path) {
  try {
    return expr::Expr::parse(text);
  } catch (const expr::ParseError& e) {
    throw ConfigError(path, std::string("at offset ") + std::to_string(e.offset()) + ": " + e.what());
  }
}

expr::Expr target_expr(const ScenarioConfig& cfg) {
  if (cfg.f.empty()) throw ConfigError("/target/f", "missing target expression");
  expr::Expr f = parse_expr(cfg.f, "/target/f");
  if (f.cols() != 1 || f.rows() != cfg.n) {
    throw ConfigError("/target/f", "target must have " + std::to_string(cfg.n) + " component(s)");
  }
  return f;
}

PointFunction point_fn(const expr::Expr& f) {
  return [f](cplx z, std::span<cplx> out) {
    const expr::Value v = f.eval(z);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = v.data[c];
  };
}

json jnum(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

json stages_json(const std::vector<StageRecord>& stages) {
  json a = json::array();
  for (const auto& s : stages) {
    a.push_back({{"stage", s.stage},
                 {"budget", jnum(s.budget)},
                 {"error", jnum(s.error)},
                 {"chain", s.chain},
                 {"detail", s.detail}});
  }
  return a;
}

json report_json(const ApproximationReport& r) {
  return {{"target", r.target},
          {"error", jnum(r.error)},
          {"residual", jnum(r.residual)},
          {"residual_scale", jnum(r.residual_scale)},
          {"relative_residual", jnum(r.residual / r.residual_scale)},
          {"residual_domain", r.residual_domain},
          {"stages", stages_json(r.stages)},
          {"chain_sum", jnum(r.chain_sum())},
          {"iterations", r.iterations},
          {"warnings", r.warnings}};
}

std::vector<cplx> interp(const GridFunction& w, cplx z) {
  std::vector<cplx> out(std::size_t(w.dim()));
  interpolate(w, z, out);
  return out;
}

// f - w at the masked nodes; residual column on the nodes of `resid_on`.
std::vector<io::SampleRow> node_rows(const GridFunction& f, const GridFunction& w, const Mask& m,
                                     const GridFunction& resid, const Mask& resid_on) {
  std::vector<io::SampleRow> rows;
  const Grid& g = w.grid();
  for (std::size_t k : m.indices()) {
    io::SampleRow r;
    r.z = g.node(k);
    auto fv = f.node(k);
    auto wv = w.node(k);
    for (std::size_t c = 0; c < fv.size(); ++c) r.value.push_back(fv[c] - wv[c]);
    if (resid_on[k]) r.residual = resid.norm_at(k);
    rows.push_back(std::move(r));
  }
  return rows;
}

void add_heatmaps(RunOutput& out, const ScenarioConfig& cfg, const GridFunction& w, const GridFunction& resid,
                  const Mask& m) {
  if (!cfg.heatmaps) return;
  const Grid& g = w.grid();
  std::vector<double> re(g.node_count()), im(g.node_count()), rs(g.node_count());
  for (std::size_t k = 0; k < g.node_count(); ++k) {
    re[k] = w.node(k)[0].real();
    im[k] = w.node(k)[0].imag();
    rs[k] = resid.norm_at(k);
  }
  const Mask inner = m.eroded(2).empty() ? m : m.eroded(2);
  out.heatmaps["w_re.svg"] = io::heatmap_svg(g, re, m, cfg.name + ": Re w");
  out.heatmaps["w_im.svg"] = io::heatmap_svg(g, im, m, cfg.name + ": Im w");
  out.heatmaps["residual.svg"] = io::heatmap_svg(g, rs, inner, cfg.name + ": |dbar_B w|");
}

void finish(RunOutput& out, const std::vector<io::SampleRow>& rows, int n) {
  out.errors_csv = io::samples_csv(rows, n);
  double res = 0.0;
  bool any = false;
  for (const auto& r : rows) {
    if (!r.residual) continue;
    res = std::max(res, *r.residual);
    any = true;
  }
  out.report["table"] = {{"rows", rows.size()}, {"max_abs", jnum(io::max_abs(rows))},
                         {"max_residual", any ? jnum(res) : json(nullptr)}};
}

Mask union_mask(const std::vector<CompactDomain>& ds, const Grid& g) {
  Mask m(g);
  for (const auto& d : ds) m = m | d.mask(g);
  return m;
}

void log_stages(std::ostream* log, const std::string& name, const std::vector<StageRecord>& stages) {
  if (!log) return;
  for (const auto& s : stages) {
    *log << name << ": " << s.stage << " error " << io::format_double(s.error);
    if (s.budget > 0) *log << " budget " << io::format_double(s.budget);
    if (!s.detail.empty()) *log << " (" << s.detail << ")";
    *log << "\n";
  }
}

}  // namespace

CompactDomain ShapeSpec::build() const {
  if (kind == "disk") return CompactDomain::disk(center, radius);
  if (kind == "annulus") return CompactDomain::annulus(center, inner, radius);
  std::vector<CubicSpline> hs;
  for (const auto& h : holes) hs.push_back(CubicSpline::closed(h));
  return CompactDomain(CubicSpline::closed(points), std::move(hs));
}

JordanArc ArcSpec::build() const {
  return JordanArc(closed ? CubicSpline::closed(points) : CubicSpline::open(points));
}

ScenarioConfig parse_config(const json& doc, const std::string& default_name) {
  check_keys(doc, "", {"name", "task", "n", "B1", "B2", "grid", "solve_domain", "geometry", "target", "tolerances",
                       "options", "output", "seed"});
  ScenarioConfig c;
  c.name = doc.contains("name") ? as_string(doc["name"], "/name") : default_name;
  if (!doc.contains("task")) throw ConfigError("/task", "missing");
  c.task = parse_task(as_string(doc["task"], "/task"), "/task");
  if (doc.contains("n")) c.n = as_int(doc["n"], "/n");
  if (c.n < 1 || c.n > 8) throw ConfigError("/n", "must lie in 1..8");
  if (doc.contains("B1")) c.b1 = as_string(doc["B1"], "/B1");
  if (doc.contains("B2")) c.b2 = as_string(doc["B2"], "/B2");

  if (!doc.contains("grid")) throw ConfigError("/grid", "missing");
  {
    const json& g = doc["grid"];
    check_keys(g, "/grid", {"center", "half_width", "N"});
    if (g.contains("center")) c.center = as_point(g["center"], "/grid/center");
    if (!g.contains("half_width")) throw ConfigError("/grid/half_width", "missing");
    c.half_width = positive(as_number(g["half_width"], "/grid/half_width"), "/grid/half_width");
    if (!g.contains("N")) throw ConfigError("/grid/N", "missing");
    c.resolution = as_int(g["N"], "/grid/N");
    const int N = c.resolution;
    if (N < 16 || N > 4096 || (N & (N - 1)) != 0) throw ConfigError("/grid/N", "must be a power of two in 16..4096");
  }
  if (doc.contains("solve_domain")) c.solve_domain = parse_shape(doc["solve_domain"], "/solve_domain");

  if (doc.contains("geometry")) {
    const json& g = doc["geometry"];
    check_keys(g, "/geometry", {"domains", "arcs", "min_angle_deg"});
    if (g.contains("domains")) {
      if (!g["domains"].is_array()) throw ConfigError("/geometry/domains", "expected a list");
      for (std::size_t k = 0; k < g["domains"].size(); ++k)
        c.domains.push_back(parse_shape(g["domains"][k], "/geometry/domains/" + std::to_string(k)));
    }
    if (g.contains("arcs")) {
      if (!g["arcs"].is_array()) throw ConfigError("/geometry/arcs", "expected a list");
      for (std::size_t k = 0; k < g["arcs"].size(); ++k)
        c.arcs.push_back(parse_arc(g["arcs"][k], "/geometry/arcs/" + std::to_string(k)));
    }
    if (g.contains("min_angle_deg")) {
      c.min_angle_deg = as_number(g["min_angle_deg"], "/geometry/min_angle_deg");
      if (!(c.min_angle_deg > 0.0 && c.min_angle_deg <= 90.0))
        throw ConfigError("/geometry/min_angle_deg", "must lie in (0, 90]");
    }
  }
  if (doc.contains("target")) {
    const json& t = doc["target"];
    check_keys(t, "/target", {"f", "eps"});
    if (t.contains("f")) c.f = as_string(t["f"], "/target/f");
    if (t.contains("eps")) c.eps_expr = as_string(t["eps"], "/target/eps");
  }
  if (doc.contains("tolerances")) {
    const json& t = doc["tolerances"];
    check_keys(t, "/tolerances", {"eps", "tol", "max_iter", "lambda", "fit_lambda"});
    if (t.contains("eps")) c.eps = positive(as_number(t["eps"], "/tolerances/eps"), "/tolerances/eps");
    if (t.contains("tol")) {
      c.tol = as_number(t["tol"], "/tolerances/tol");
      if (!(c.tol > 0.0 && c.tol < 1.0)) throw ConfigError("/tolerances/tol", "must lie in (0, 1)");
    }
    if (t.contains("max_iter")) {
      c.max_iter = as_int(t["max_iter"], "/tolerances/max_iter");
      if (c.max_iter < 1) throw ConfigError("/tolerances/max_iter", "must be >= 1");
    }
    if (t.contains("lambda")) {
      c.lambda = as_number(t["lambda"], "/tolerances/lambda");
      if (c.lambda < 0.0) throw ConfigError("/tolerances/lambda", "must be >= 0");
    }
    if (t.contains("fit_lambda")) {
      c.fit_lambda = as_number(t["fit_lambda"], "/tolerances/fit_lambda");
      if (c.fit_lambda < 0.0) throw ConfigError("/tolerances/fit_lambda", "must be >= 0");
    }
  }
  if (doc.contains("options")) {
    const json& o = doc["options"];
    check_keys(o, "/options", {"degree", "m_max", "collar", "basis_domain"});
    if (o.contains("degree")) {
      c.degree = as_int(o["degree"], "/options/degree");
      if (c.degree < 0 || c.degree > 64) throw ConfigError("/options/degree", "must lie in 0..64");
    }
    if (o.contains("m_max")) {
      c.m_max = as_int(o["m_max"], "/options/m_max");
      if (c.m_max < 1 || c.m_max > 16) throw ConfigError("/options/m_max", "must lie in 1..16");
    }
    if (o.contains("collar")) {
      c.collar = as_number(o["collar"], "/options/collar");
      if (c.collar < 0.0) throw ConfigError("/options/collar", "must be >= 0");
    }
    if (o.contains("basis_domain")) c.basis_domain = parse_shape(o["basis_domain"], "/options/basis_domain");
  }
  if (doc.contains("output")) {
    const json& o = doc["output"];
    check_keys(o, "/output", {"dir", "heatmaps"});
    if (o.contains("dir")) c.out_dir = as_string(o["dir"], "/output/dir");
    if (o.contains("heatmaps")) c.heatmaps = as_bool(o["heatmaps"], "/output/heatmaps");
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) throw ConfigError("/seed", "expected a non-negative integer");
    c.seed = doc["seed"].get<std::uint64_t>();
  }

  // task requirements
  const bool needs_f = c.task != Task::Validate;
  if (needs_f && c.f.empty()) throw ConfigError("/target/f", "missing (required by task " + task_name(c.task) + ")");
  if (c.task == Task::Carleman && c.eps_expr.empty()) throw ConfigError("/target/eps", "missing (required by task carleman)");
  if ((c.task == Task::Correct || c.task == Task::Runge) && c.domains.empty())
    throw ConfigError("/geometry/domains", "task " + task_name(c.task) + " needs at least one domain");
  if ((c.task == Task::Correct || c.task == Task::Runge) && !c.arcs.empty())
    throw ConfigError("/geometry/arcs", "task " + task_name(c.task) + " takes domains only");
  if ((c.task == Task::Mergelyan || c.task == Task::Validate) && c.domains.empty() && c.arcs.empty())
    throw ConfigError("/geometry", "task " + task_name(c.task) + " needs domains or arcs");
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("", "cannot read " + path.string());
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError("", path.string() + ": " + e.what());
  }
  return parse_config(doc, path.stem().string());
}

void check_config(const ScenarioConfig& cfg) {
  const Grid grid = make_grid(cfg);
  // one coefficient at a time, so the error names the offending key
  for (const auto& [key, b1, b2] : {std::tuple{"/B1", cfg.b1, std::string("0")}, {"/B2", std::string("0"), cfg.b2}}) {
    try {
      (void)CoefficientField::from_text(cfg.n, b1, b2, grid);
    } catch (const expr::ParseError& e) {
      throw ConfigError(key, std::string("at offset ") + std::to_string(e.offset()) + ": " + e.what());
    } catch (const Error& e) {
      throw ConfigError(key, e.what());
    }
  }
  if (!cfg.f.empty()) (void)target_expr(cfg);
  if (!cfg.eps_expr.empty()) {
    const expr::Expr e = parse_expr(cfg.eps_expr, "/target/eps");
    if (!e.is_scalar()) throw ConfigError("/target/eps", "must be a scalar expression");
  }
  auto build = [](auto&& fn, const std::string& path) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(path, e.what());
    }
  };
  if (cfg.solve_domain) build([&] { (void)cfg.solve_domain->build(); }, "/solve_domain");
  if (cfg.basis_domain) build([&] { (void)cfg.basis_domain->build(); }, "/options/basis_domain");
  for (std::size_t k = 0; k < cfg.domains.size(); ++k)
    build([&] { (void)cfg.domains[k].build(); }, "/geometry/domains/" + std::to_string(k));
  for (std::size_t k = 0; k < cfg.arcs.size(); ++k)
    build([&] { (void)cfg.arcs[k].build(); }, "/geometry/arcs/" + std::to_string(k));
  if (solve_domain_mask(cfg, grid).empty()) throw ConfigError("/solve_domain", "covers no grid node");
}

RunOutput run(const ScenarioConfig& cfg, int threads, std::ostream* log) {
  check_config(cfg);
  const Grid grid = make_grid(cfg);
  const int n = cfg.n;
  RunOutput out;
  json& rep = out.report;
  rep["scenario"] = cfg.name;
  rep["task"] = task_name(cfg.task);
  rep["n"] = n;
  rep["B1"] = cfg.b1;
  rep["B2"] = cfg.b2;
  rep["grid"] = {{"center", {cfg.center.real(), cfg.center.imag()}},
                 {"half_width", cfg.half_width},
                 {"N", cfg.resolution},
                 {"h", grid.spacing()}};
  rep["seed"] = cfg.seed;

  if (cfg.task == Task::Validate) {
    const AdmissibleSet S = make_set(cfg, grid);
    const ValidationReport v = validate_admissible(S);
    json att = json::array();
    for (const auto& a : v.attachments) {
      att.push_back({{"arc", a.arc},
                     {"end", a.end},
                     {"domain", a.domain},
                     {"point", {a.point.real(), a.point.imag()}},
                     {"angle_deg", jnum(a.angle_deg)}});
    }
    json comps = json::array();
    for (cplx z : v.offending_components) comps.push_back({z.real(), z.imag()});
    rep["admissible"] = {{"ok", v.ok()},
                         {"simple", v.simple},
                         {"positive_area", v.positive_area},
                         {"disjoint", v.disjoint},
                         {"arcs_meet_only_at_endpoints", v.arcs_meet_only_at_endpoints},
                         {"transversal", v.transversal},
                         {"inside_omega", v.inside_omega},
                         {"runge", v.runge},
                         {"attachments", att},
                         {"enclosed_components", comps},
                         {"messages", v.messages}};
    if (log) *log << cfg.name << ": admissible " << (v.ok() ? "yes" : "no") << ", runge " << (v.runge ? "yes" : "no") << "\n";
    finish(out, {}, n);
    return out;
  }

  const CoefficientField coeff = CoefficientField::from_text(n, cfg.b1, cfg.b2, grid);
  const Mask D = solve_domain_mask(cfg, grid);
  SolverOptions sopt;
  sopt.tol = cfg.tol;
  sopt.max_iter = cfg.max_iter;
  sopt.lambda = cfg.lambda;
  sopt.threads = std::max(1, threads);
  const PascaliSolver solver(coeff, CauchyGreenOperator(grid, D), sopt);
  rep["solve_domain_nodes"] = D.count();

  if (cfg.task == Task::Carleman) {
    const expr::Expr f = target_expr(cfg);
    const expr::Expr eps = parse_expr(cfg.eps_expr, "/target/eps");
    CarlemanOptions copt;
    copt.degree = cfg.degree;
    copt.mergelyan.lambda = cfg.fit_lambda;
    const CarlemanResult cr = carleman(
        solver, [&](double t, std::span<cplx> o) { point_fn(f)(cplx(t, 0.0), o); }, eps, cfg.m_max, copt);
    rep["report"] = report_json(cr.report);
    json stages = json::array();
    for (const auto& s : cr.stages) {
      stages.push_back({{"m", s.m},
                        {"eps_prev", jnum(s.eps_prev)},
                        {"bound", jnum(s.bound)},
                        {"step", jnum(s.step)},
                        {"satisfied", s.step <= s.bound},
                        {"tail_bound", jnum(s.tail)},
                        {"mergelyan", report_json(s.mergelyan)}});
      log_stages(log, cfg.name + " m=" + std::to_string(s.m), s.mergelyan.stages);
    }
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < cr.line_t.size(); ++k) margin = std::min(margin, cr.line_eps[k] - cr.line_error[k]);
    rep["carleman"] = {{"m_max", cr.schedule.m_max},
                       {"eps_schedule", cr.schedule.eps},
                       {"stages", stages},
                       {"final_check", cr.final_check},
                       {"line_samples", cr.line_t.size()},
                       {"min_margin", jnum(margin)}};
    const GridFunction resid = dbar_B(coeff, cr.w);
    std::vector<io::SampleRow> rows;
    std::vector<cplx> fv(static_cast<std::size_t>(n));
    for (std::size_t k = 0; k < cr.line_t.size(); ++k) {
      const cplx z(cr.line_t[k], 0.0);
      point_fn(f)(z, fv);
      const auto wv = interp(cr.w, z);
      io::SampleRow r;
      r.z = z;
      for (std::size_t c = 0; c < fv.size(); ++c) r.value.push_back(fv[c] - wv[c]);
      rows.push_back(std::move(r));
    }
    rep["error"] = jnum(cr.report.error);
    add_heatmaps(out, cfg, cr.w, resid, cr.domain);
    finish(out, rows, n);
    if (log) *log << cfg.name << ": final pointwise check " << (cr.final_check ? "true" : "false") << "\n";
    return out;
  }

  const expr::Expr f_expr = target_expr(cfg);
  const GridFunction f = sample(grid, n, point_fn(f_expr));

  if (cfg.task == Task::Solve) {
    SolveStats st;
    const GridFunction w = solver.solve_P(f, &st);
    const GridFunction resid = dbar_B(coeff, w);
    const Mask m = D.eroded(2).empty() ? D : D.eroded(2);
    ApproximationReport r;
    r.target = "solve domain eroded by 2 cells";
    r.iterations = st.iterations;
    r.stages.push_back({"solve_P", cfg.tol, st.relative_residual, false, "relative sup residual of P(w) = f"});
    const auto rows = node_rows(f, w, m, resid, m);
    r.error = io::max_abs(rows);
    r.residual = sup_norm(resid, m);
    r.residual_scale = std::max(1.0, sup_norm(w, m));
    r.residual_domain = r.target;
    rep["report"] = report_json(r);
    rep["error"] = jnum(r.error);
    log_stages(log, cfg.name, r.stages);
    add_heatmaps(out, cfg, w, resid, D);
    finish(out, rows, n);
    return out;
  }

  const AdmissibleSet S = make_set(cfg, grid);
  const Mask K = union_mask(S.domains, grid);

  if (cfg.task == Task::Correct) {
    const CorrectionResult cr = solver.correct_to_solution(f, K, cfg.collar);
    const GridFunction resid = dbar_B(coeff, cr.w);
    const Mask inner = K.eroded(2);
    ApproximationReport r;
    r.target = "union of domains";
    r.iterations = cr.stats.iterations;
    r.stages.push_back({"correct", 0.0, sup_norm(f - cr.w, K), true,
                        "collar " + io::format_double(cfg.collar) + " cells"});
    const auto rows = node_rows(f, cr.w, K, resid, inner);
    r.error = io::max_abs(rows);
    r.residual = cr.achieved_residual;
    r.residual_scale = std::max(1.0, sup_norm(cr.w, inner));
    r.residual_domain = "union of domains eroded by 2 cells";
    rep["report"] = report_json(r);
    rep["correction"] = {{"achieved_residual", jnum(cr.achieved_residual)},
                         {"correction_size", jnum(cr.correction_size)},
                         {"data_size", jnum(cr.data_size)},
                         {"ratio", jnum(cr.data_size > 0 ? cr.correction_size / cr.data_size : 0.0)}};
    rep["error"] = jnum(r.error);
    log_stages(log, cfg.name, r.stages);
    add_heatmaps(out, cfg, cr.w, resid, K);
    finish(out, rows, n);
    return out;
  }

  if (cfg.task == Task::Runge) {
    Mask U(grid);
    if (cfg.basis_domain) {
      U = cfg.basis_domain->build().mask(grid);
    } else {
      bool found = false;
      for (int off : {16, 8, 4}) {
        const Mask cand = K.dilated(double(off));
        if (cand.dilated(11.0).subset_of(D)) {
          U = cand;
          found = true;
          break;
        }
      }
      if (!found) throw ConfigError("/options/basis_domain", "domains are too close to the edge of the solve domain");
    }
    if (!K.subset_of(U)) throw ConfigError("/options/basis_domain", "must contain every domain");
    const FormalPowerBasis basis = solver.build_formal_powers(U, cfg.degree);
    const RungeResult rr = runge_approximate(basis, f, K, cfg.fit_lambda);
    const GridFunction resid = dbar_B(coeff, rr.w);
    const Mask inner = U.eroded(2);
    ApproximationReport r;
    r.target = "union of domains";
    r.warnings = basis.warnings;
    r.warnings.insert(r.warnings.end(), rr.warnings.begin(), rr.warnings.end());
    double worst_member = 0.0;
    for (const auto& m : basis.members) worst_member = std::max(worst_member, m.residual);
    r.stages.push_back({"basis", 0.0, worst_member, false,
                        std::to_string(basis.members.size()) + " members, worst member residual"});
    r.stages.push_back({"runge", 0.0, rr.err, true, "least-squares fit on the target"});
    const auto rows = node_rows(f, rr.w, K, resid, inner);
    r.error = io::max_abs(rows);
    r.residual = sup_norm(resid, inner);
    r.residual_scale = std::max(1.0, sup_norm(rr.w, inner));
    r.residual_domain = "basis domain eroded by 2 cells";
    rep["report"] = report_json(r);
    rep["runge"] = {{"degree", basis.degree_max}, {"members", basis.members.size()}, {"coefficients", rr.coefficients}};
    rep["error"] = jnum(r.error);
    log_stages(log, cfg.name, r.stages);
    add_heatmaps(out, cfg, rr.w, resid, U);
    finish(out, rows, n);
    return out;
  }

  // mergelyan
  {
    const ValidationReport v = validate_admissible(S);
    if (!v.ok()) {
      std::string msg = "set is not admissible";
      for (const auto& m : v.messages) msg += "; " + m;
      throw ConfigError("/geometry", msg);
    }
    const std::vector<ArcData> arcs = sample_arc_targets(S, n, point_fn(f_expr));
    MergelyanOptions mopt;
    mopt.degree = cfg.degree;
    mopt.lambda = cfg.fit_lambda;
    const MergelyanResult mr = mergelyan(solver, S, f, arcs, cfg.eps, mopt);
    const GridFunction resid = dbar_B(coeff, mr.w);
    const Mask inner = mr.domain.eroded(2);
    auto rows = node_rows(f, mr.w, K, resid, inner);
    for (const auto& a : arcs) {
      for (std::size_t s = 0; s < a.samples.z.size(); ++s) {
        io::SampleRow r;
        r.z = a.samples.z[s];
        const auto wv = interp(mr.w, r.z);
        for (std::size_t c = 0; c < std::size_t(n); ++c) r.value.push_back(a.values[s * std::size_t(n) + c] - wv[c]);
        rows.push_back(std::move(r));
      }
    }
    rep["report"] = report_json(mr.report);
    rep["eps"] = cfg.eps;
    rep["error"] = jnum(mr.report.error);
    log_stages(log, cfg.name, mr.report.stages);
    add_heatmaps(out, cfg, mr.w, resid, mr.domain);
    finish(out, rows, n);
    return out;
  }
}

void write_outputs(const RunOutput& out, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw io::IoError(dir, "cannot create directory: " + ec.message());
  io::write_text(dir / "report.json", out.report.dump(2) + "\n");
  io::write_text(dir / "errors.csv", out.errors_csv);
  for (const auto& [name, svg] : out.heatmaps) io::write_text(dir / name, svg);
}

}  // namespace pascali::scenario
