#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pascali/errors.hpp"
#include "pascali/geometry.hpp"

namespace pascali::scenario {

/// Invalid scenario file; key_path locates the offending entry ("/grid/N").
class ConfigError : public Error {
 public:
  ConfigError(std::string key_path, const std::string& what)
      : Error((key_path.empty() ? std::string("/") : key_path) + ": " + what), key_path_(std::move(key_path)) {}
  const std::string& key_path() const { return key_path_; }

 private:
  std::string key_path_;
};

enum class Task { Solve, Correct, Runge, Mergelyan, Carleman, Validate };

std::string task_name(Task t);

/// Closed planar region: a disk, an annulus or a closed spline through
/// control points with optional holes.
struct ShapeSpec {
  std::string kind;  // "disk", "annulus", "points"
  cplx center;
  double radius = 0.0;
  double inner = 0.0;
  std::vector<cplx> points;
  std::vector<std::vector<cplx>> holes;

  CompactDomain build() const;
};

struct ArcSpec {
  std::vector<cplx> points;
  bool closed = false;

  JordanArc build() const;
};

/// Everything a run needs; see docs/config.md for the file format.
struct ScenarioConfig {
  std::string name;
  Task task = Task::Solve;
  int n = 1;
  std::string b1 = "0";
  std::string b2 = "0";
  cplx center;
  double half_width = 1.0;
  int resolution = 64;
  std::optional<ShapeSpec> solve_domain;  // D; default: disk inscribed in the box, two cells in
  std::vector<ShapeSpec> domains;
  std::vector<ArcSpec> arcs;
  double min_angle_deg = 15.0;
  std::string f;             // target expression (in z, x, y; t = x on the real line)
  std::string eps_expr;      // carleman pointwise budget
  double eps = 0.1;
  double tol = 1e-8;
  int max_iter = 500;
  double lambda = 1e-10;     // Tikhonov weight of solve_P
  double fit_lambda = 1e-12; // Tikhonov weight of the Runge fit
  int degree = 12;
  int m_max = 3;
  double collar = 10.0;
  std::optional<ShapeSpec> basis_domain;  // runge: generation domain U
  bool heatmaps = false;
  std::string out_dir;
  std::uint64_t seed = 0;
};

/// Validates and converts a parsed document; unknown keys are rejected.
ScenarioConfig parse_config(const nlohmann::json& doc, const std::string& default_name = "scenario");

/// Reads and parses a config file; syntax errors are ConfigErrors too.
ScenarioConfig load_config(const std::filesystem::path& path);

/// Builds the geometry and coefficient objects without running anything,
/// so that expression and shape errors surface as ConfigErrors.
void check_config(const ScenarioConfig& cfg);

struct RunOutput {
  nlohmann::json report;
  std::string errors_csv;
  std::map<std::string, std::string> heatmaps;  // file name -> SVG text
};

/// Executes the scenario's task. Numerical failures propagate as library
/// errors (StageError, ConvergenceError, ...).
RunOutput run(const ScenarioConfig& cfg, int threads, std::ostream* log = nullptr);

/// Writes report.json, errors.csv and the heatmaps into dir.
void write_outputs(const RunOutput& out, const std::filesystem::path& dir);

}  // namespace pascali::scenario
