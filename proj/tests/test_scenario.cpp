#include <doctest.h>

#include <fstream>
#include <sstream>

#include "pascali/scenario.hpp"

using namespace pascali;
using nlohmann::json;
using scenario::ConfigError;

namespace {

json base() {
  return json::parse(R"({"task": "solve", "grid": {"half_width": 1, "N": 32}, "target": {"f": "z^2"}})");
}

std::string key_path_of(const json& doc) {
  try {
    const auto cfg = scenario::parse_config(doc);
    scenario::check_config(cfg);
  } catch (const ConfigError& e) {
    return e.key_path();
  }
  return "<accepted>";
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    out.push_back(cells);
  }
  return out;
}

}  // namespace

TEST_CASE("defaults of a minimal config") {
  const auto cfg = scenario::parse_config(base(), "minimal");
  CHECK(cfg.name == "minimal");
  CHECK(cfg.task == scenario::Task::Solve);
  CHECK(cfg.n == 1);
  CHECK(cfg.resolution == 32);
  CHECK(cfg.b1 == "0");
  CHECK(cfg.tol == 1e-8);
  CHECK_FALSE(cfg.solve_domain.has_value());
}

TEST_CASE("unknown keys are rejected with their path") {
  json d = base();
  d["colour"] = 1;
  CHECK(key_path_of(d) == "/colour");
  d = base();
  d["grid"]["resolution"] = 64;
  CHECK(key_path_of(d) == "/grid/resolution");
  d = base();
  d["task"] = "validate";
  d["geometry"]["domains"] = json::array({{{"disk", {{"center", {0, 0}}, {"radius", 0.5}, {"r", 1}}}}});
  CHECK(key_path_of(d) == "/geometry/domains/0/disk/r");
}

TEST_CASE("missing and invalid fields") {
  json d = base();
  d.erase("task");
  CHECK(key_path_of(d) == "/task");
  d = base();
  d["grid"]["N"] = 48;
  CHECK(key_path_of(d) == "/grid/N");
  d = base();
  d["grid"]["half_width"] = "wide";
  CHECK(key_path_of(d) == "/grid/half_width");
  d = base();
  d["task"] = "integrate";
  CHECK(key_path_of(d) == "/task");
  d = base();
  d["target"]["f"] = "z +* 2";
  CHECK(key_path_of(d) == "/target/f");
  d = base();
  d["B2"] = "[[1,0],[0,1]]";
  CHECK(key_path_of(d) == "/B2");
  d = base();
  d["tolerances"]["tol"] = 2.0;
  CHECK(key_path_of(d) == "/tolerances/tol");
  d = base();
  d["n"] = 2;
  CHECK(key_path_of(d) == "/target/f");
  d["target"]["f"] = "[z, 1]";
  CHECK(key_path_of(d) == "<accepted>");
}

TEST_CASE("task requirements") {
  json d = base();
  d["task"] = "correct";
  CHECK(key_path_of(d) == "/geometry/domains");
  d["task"] = "carleman";
  CHECK(key_path_of(d) == "/target/eps");
  d = base();
  d["task"] = "runge";
  d["geometry"]["domains"] = json::array({{{"disk", {{"center", {0, 0}}, {"radius", 0.5}}}}});
  d["geometry"]["arcs"] = json::array({{{"points", {{0.5, 0}, {0.9, 0}}}}});
  CHECK(key_path_of(d) == "/geometry/arcs");
  d = base();
  d["task"] = "validate";
  d.erase("target");
  CHECK(key_path_of(d) == "/geometry");
}

TEST_CASE("solve run for B = 0 fills the residual column") {
  json d = base();
  d["grid"]["N"] = 64;
  const auto out = scenario::run(scenario::parse_config(d), 1);
  const auto rows = csv_rows(out.errors_csv);
  REQUIRE(rows.size() > 1u);
  CHECK(rows[0] == std::vector<std::string>{"x", "y", "re", "im", "abs", "residual"});
  double worst = 0.0;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    REQUIRE(rows[k].size() == 6u);
    REQUIRE_FALSE(rows[k][5].empty());
    worst = std::max(worst, std::stod(rows[k][5]));
  }
  CHECK(worst <= 1e-2);
  CHECK(out.report["task"] == "solve");
  CHECK(out.report["error"].get<double>() == 0.0);
  CHECK(out.report["table"]["rows"].get<std::size_t>() == rows.size() - 1);
  CHECK(out.heatmaps.empty());
}

TEST_CASE("validate run reports an annulus as not Runge") {
  json d = json::parse(R"({"task": "validate", "grid": {"half_width": 2, "N": 64},
      "geometry": {"domains": [{"annulus": {"center": [0, 0], "inner": 0.5, "outer": 1}}]}})");
  const auto out = scenario::run(scenario::parse_config(d), 1);
  CHECK(out.report["admissible"]["runge"] == false);
  CHECK(out.report["admissible"]["ok"] == false);
  d["geometry"]["domains"][0] = json::parse(R"({"disk": {"center": [0, 0], "radius": 1}})");
  CHECK(scenario::run(scenario::parse_config(d), 1).report["admissible"]["ok"] == true);
}

TEST_CASE("mergelyan refuses a set that is not admissible") {
  json d = json::parse(R"({"task": "mergelyan", "grid": {"half_width": 2, "N": 64}, "target": {"f": "z"},
      "geometry": {"domains": [{"annulus": {"center": [0, 0], "inner": 0.5, "outer": 1}}]}})");
  try {
    scenario::run(scenario::parse_config(d), 1);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.key_path() == "/geometry");
  }
}

TEST_CASE("runs are deterministic and written files match the output") {
  json d = base();
  d["task"] = "correct";
  d["B2"] = "-1";
  d["grid"]["N"] = 64;
  d["target"]["f"] = "exp(2*x) + 0.01*conj(z)";
  d["geometry"]["domains"] = json::array({{{"disk", {{"center", {0, 0}}, {"radius", 0.4}}}}});
  d["output"]["heatmaps"] = true;
  const auto cfg = scenario::parse_config(d);
  const auto a = scenario::run(cfg, 1);
  const auto b = scenario::run(cfg, 2);
  CHECK(a.report.dump(2) == b.report.dump(2));
  CHECK(a.errors_csv == b.errors_csv);
  CHECK(a.heatmaps == b.heatmaps);
  CHECK(a.heatmaps.size() == 3u);

  const auto dir = std::filesystem::temp_directory_path() / "pascali-scenario-test";
  std::filesystem::remove_all(dir);
  scenario::write_outputs(a, dir);
  std::ifstream in(dir / "errors.csv", std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  CHECK(s.str() == a.errors_csv);
  CHECK(std::filesystem::exists(dir / "report.json"));
  CHECK(std::filesystem::exists(dir / "residual.svg"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("config files with syntax errors are config errors") {
  const auto p = std::filesystem::temp_directory_path() / "pascali-bad.json";
  {
    std::ofstream out(p);
    out << "{\"task\": \"solve\",";
  }
  CHECK_THROWS_AS(scenario::load_config(p), ConfigError);
  std::filesystem::remove(p);
  CHECK_THROWS_AS(scenario::load_config(p), ConfigError);
}
