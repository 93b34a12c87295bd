// equifold: run property suites over a tower, or describe it.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "equifold/harness.hpp"

namespace {

int open_or_fail(std::ofstream& out, const std::string& path) {
  out.open(path);
  if (!out) {
    std::cerr << "equifold: cannot write " << path << '\n';
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Folding-map functoriality checks on finite Galois covers of graphs"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> suites;
  std::optional<std::uint64_t> seed;
  std::string out_path;
  bool timings = false;
  auto* run = app.add_subcommand("run", "Run property suites and emit a report");
  run->add_option("--config", config_path, "Config JSON path or built-in tower name")->required();
  run->add_option("--suite", suites, "Suite to run (repeatable); default: the config's suites");
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--out", out_path, "JSON-lines report path; also writes <out>.summary.csv and <out>.profile.csv");
  run->add_flag("--timings", timings, "Include per-check wall time (reports are then not byte-stable)");

  std::string distances_path;
  auto* desc = app.add_subcommand("describe", "Summarize a tower");
  desc->add_option("--config", config_path, "Config JSON path or built-in tower name")->required();
  desc->add_option("--distances", distances_path, "Write the M₁ distance matrix as CSV");

  app.add_subcommand("list", "List built-in towers");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("list")) {
      for (const auto& name : equifold::builtin_tower_names()) std::cout << name << '\n';
      return 0;
    }
    auto config = equifold::load_config(config_path);

    if (desc->parsed()) {
      equifold::describe(std::cout, config);
      if (!distances_path.empty()) {
        std::ofstream os;
        if (int rc = open_or_fail(os, distances_path)) return rc;
        const auto tower = equifold::build_tower(config);
        equifold::write_distances_csv(os, *tower.ctx.m1);
      }
      return 0;
    }

    if (!suites.empty()) {
      for (const auto& s : suites)
        if (!equifold::suite_table().contains(s)) throw equifold::Error(equifold::ErrorKind::ConfigError, "unknown suite " + s);
      config.suites = suites;
    }
    if (seed) config.seed = *seed;
    const auto report = equifold::run_suites(config);

    if (out_path.empty()) {
      equifold::write_jsonl(std::cout, report, timings);
    } else {
      std::ofstream jsonl, summary, profile;
      if (int rc = open_or_fail(jsonl, out_path)) return rc;
      if (int rc = open_or_fail(summary, out_path + ".summary.csv")) return rc;
      equifold::write_jsonl(jsonl, report, timings);
      equifold::write_summary_csv(summary, report);
      if (!report.profile.empty()) {
        if (int rc = open_or_fail(profile, out_path + ".profile.csv")) return rc;
        equifold::write_profile_csv(profile, report);
      }
    }
    std::size_t failed = 0;
    for (const auto& r : report.records)
      if (!r.pass) {
        ++failed;
        std::cerr << "FAIL " << r.suite << '/' << r.check << " residual=" << r.residual << " bound=" << r.bound << '\n';
      }
    std::cerr << report.records.size() - failed << '/' << report.records.size() << " checks passed\n";
    return failed == 0 ? 0 : 1;
  } catch (const equifold::Error& e) {
    std::cerr << "equifold: " << e.what() << '\n';
    return e.kind() == equifold::ErrorKind::ConfigError ? 2 : 1;
  }
}
