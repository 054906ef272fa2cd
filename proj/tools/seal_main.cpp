#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "seal/errors.hpp"
#include "seal/scenario.hpp"
#include "seal/sim.hpp"

namespace {

int cmd_run(const std::string& scenario_path, std::optional<std::uint64_t> seed,
            std::optional<long> steps, const std::string& out_dir,
            std::optional<int> robots, const std::string& baseline) {
  seal::ScenarioConfig config = seal::load_scenario(scenario_path);
  if (seed) config.seed = *seed;
  if (steps) config.steps = *steps;
  if (robots) {
    config.robots = *robots;
    if (static_cast<int>(config.starts.size()) > *robots)
      config.starts.resize(*robots);
    config.apply_default_starts();
  }
  if (!baseline.empty()) config.baseline = baseline;
  config.validate();

  seal::RunReport report = seal::run_simulation(config, out_dir);
  std::cout << "steps: " << report.steps << (report.completed ? " (completed)" : "")
            << "\n"
            << "explored: " << report.explored_pct << " %\n"
            << "map ssim: " << report.map_ssim << "\n"
            << "ate: " << report.ate_m << " m, ale: " << report.ale_m << " m\n"
            << "distance: " << report.total_distance_m << " m\n";
  if (!out_dir.empty()) std::cout << "artifacts written to " << out_dir << "\n";
  return 0;
}

struct ComparisonRow {
  const char* label;
  const char* key;
  const char* unit;
};

int cmd_compare(const std::string& runs) {
  std::vector<std::string> dirs;
  std::stringstream ss(runs);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) dirs.push_back(item);
  }
  if (dirs.size() < 2) {
    std::cerr << "compare needs at least two run directories\n";
    return 2;
  }

  std::vector<nlohmann::json> reports;
  for (const std::string& d : dirs) {
    std::ifstream in(d + "/metrics.json");
    if (!in) {
      std::cerr << "cannot open " << d << "/metrics.json\n";
      return 2;
    }
    reports.push_back(nlohmann::json::parse(in));
  }

  const ComparisonRow rows[] = {
      {"Mapping Time", "mapping_time_s", "s"},
      {"Total distance", "total_distance_m", "m"},
      {"Explored Area", "explored_pct", "%"},
      {"Map SSIM", "map_ssim", ""},
      {"ATE", "ate_m", "m"},
      {"ALE", "ale_m", "m"},
  };

  std::printf("%-16s", "Metric");
  for (const std::string& d : dirs) std::printf(" | %-18s", d.c_str());
  std::printf("\n");
  std::printf("%.*s\n", static_cast<int>(16 + dirs.size() * 21),
              "-----------------------------------------------------------------"
              "-----------------------------------------------------------------");
  for (const ComparisonRow& row : rows) {
    std::printf("%-16s", row.label);
    for (const auto& r : reports) {
      const double v = r.value(row.key, 0.0);
      std::printf(" | %12.4f %-5s", v, row.unit);
    }
    std::printf("\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SEAL multi-robot exploration and localization simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir;
  std::string baseline;
  std::string runs;
  std::optional<std::uint64_t> seed;
  std::optional<long> steps;
  std::optional<int> robots;

  CLI::App* run = app.add_subcommand("run", "Run a scenario");
  run->add_option("--scenario", scenario_path, "Scenario file")->required();
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--steps", steps, "Override the step budget");
  run->add_option("--out", out_dir, "Output directory for maps and metrics");
  run->add_option("--robots", robots, "Override the robot count");
  run->add_option("--baseline", baseline, "Planner baseline: frontier|none")
      ->check(CLI::IsMember({"frontier", "none"}));

  CLI::App* compare = app.add_subcommand("compare", "Compare two or more runs");
  compare->add_option("--runs", runs, "Comma-separated run directories")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(scenario_path, seed, steps, out_dir, robots, baseline);
    if (compare->parsed()) return cmd_compare(runs);
  } catch (const seal::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
