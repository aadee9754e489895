// pascali-lab: runs scenario files and writes report.json, errors.csv and
// optional SVG heatmaps.
//
//   pascali-lab run <config>... [--out DIR] [--jobs K] [--verbose]
//   pascali-lab validate <config>
//
// Exit status: 0 success, 1 config or I/O error, 2 numerical failure.
// PASCALI_LAB_THREADS caps the total number of worker threads.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "pascali/errors.hpp"
#include "pascali/expr.hpp"
#include "pascali/report_io.hpp"
#include "pascali/scenario.hpp"

namespace fs = std::filesystem;
using namespace pascali;

namespace {

int thread_cap() {
  int cap = int(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("PASCALI_LAB_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v >= 1) cap = v;
    } catch (const std::exception&) {
      std::cerr << "warning: ignoring PASCALI_LAB_THREADS='" << env << "'\n";
    }
  }
  return cap;
}

struct Outcome {
  int code = 0;
  std::string message;
  std::string log;
};

Outcome run_one(const fs::path& config, const fs::path& out_dir, bool append_stem, int threads, bool verbose) {
  Outcome o;
  std::ostringstream log;
  try {
    const scenario::ScenarioConfig cfg = scenario::load_config(config);
    fs::path dir;
    if (!out_dir.empty()) {
      dir = append_stem ? out_dir / config.stem() : out_dir;
    } else if (!cfg.out_dir.empty()) {
      dir = cfg.out_dir;
    } else {
      dir = fs::path("pascali-out") / config.stem();
    }
    const scenario::RunOutput out = scenario::run(cfg, threads, verbose ? &log : nullptr);
    scenario::write_outputs(out, dir);
    o.message = config.string() + ": ok -> " + dir.string();
  } catch (const scenario::ConfigError& e) {
    o.code = 1;
    o.message = config.string() + ": config error at " + e.what();
  } catch (const io::IoError& e) {
    o.code = 1;
    o.message = config.string() + ": I/O error: " + e.what();
  } catch (const StageError& e) {
    o.code = 2;
    o.message = config.string() + ": stage '" + e.stage() + "' failed, best error " +
                io::format_double(e.best_error()) + ": " + e.what();
  } catch (const ConvergenceError& e) {
    o.code = 2;
    o.message = config.string() + ": " + e.what() + " (iterations " + std::to_string(e.iterations()) + ")";
  } catch (const expr::EvalError& e) {
    o.code = 2;
    o.message = config.string() + ": evaluation failed: " + e.what();
  } catch (const Error& e) {
    o.code = 2;
    o.message = config.string() + ": " + e.what();
  } catch (const std::exception& e) {
    o.code = 2;
    o.message = config.string() + ": unexpected failure: " + e.what();
  }
  o.log = log.str();
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scenario runner for Pascali systems"};
  app.require_subcommand(1);

  std::vector<std::string> configs;
  std::string out_dir;
  int jobs = 1;
  bool verbose = false;
  auto* run = app.add_subcommand("run", "run one or more scenario files");
  run->add_option("config", configs, "scenario files")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory (one subdirectory per config when several are given)");
  run->add_option("--jobs", jobs, "scenarios run concurrently")->check(CLI::PositiveNumber);
  run->add_flag("--verbose", verbose, "print stage records");

  std::string validate_config;
  auto* validate = app.add_subcommand("validate", "check a scenario file without running it");
  validate->add_option("config", validate_config, "scenario file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (*validate) {
    try {
      const auto cfg = scenario::load_config(validate_config);
      scenario::check_config(cfg);
      std::cout << validate_config << ": valid (task " << scenario::task_name(cfg.task) << ")\n";
      return 0;
    } catch (const scenario::ConfigError& e) {
      std::cerr << validate_config << ": config error at " << e.what() << "\n";
      return 1;
    }
  }

  const int cap = thread_cap();
  const int workers = std::clamp(jobs, 1, std::min(cap, int(configs.size())));
  const int per_run = std::max(1, cap / workers);
  const bool append_stem = configs.size() > 1;

  std::vector<Outcome> outcomes(configs.size());
  std::atomic<std::size_t> next{0};
  std::mutex print;
  auto worker = [&] {
    for (std::size_t k = next++; k < configs.size(); k = next++) {
      outcomes[k] = run_one(configs[k], out_dir, append_stem, per_run, verbose);
      std::lock_guard lock(print);
      std::cerr << outcomes[k].log;
      (outcomes[k].code == 0 ? std::cout : std::cerr) << outcomes[k].message << "\n";
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  int code = 0;
  for (const auto& o : outcomes) code = std::max(code, o.code);
  return code;
}
