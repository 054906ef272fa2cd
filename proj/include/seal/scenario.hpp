#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seal/geometry.hpp"
#include "seal/gp.hpp"
#include "seal/world.hpp"

namespace seal {

// Flat key-value scenario description. Every knob the simulation exposes is a
// line of the scenario file; unknown keys are rejected with the line number.
struct ScenarioConfig {
  std::string world = "builtin:bookstore";
  double resolution = 0.2;
  int robots = 3;
  std::vector<Pose2D> starts;  // filled with defaults when empty
  std::uint64_t seed = 1;
  long steps = 5000;
  double dt = 0.1;

  MotionLimits limits;
  SensorSpec sensor;
  RssiChannel channel;
  double connectivity_dbm = -75.0;

  Kernel gp_kernel;
  int gp_max_points = 400;
  double gp_bin_m = 0.8;
  double gp_support_radius = 1.25;
  int gp_em_iters = 5;
  double theta_explore = 0.65;

  int hypotheses = 25;  // N_s
  double likelihood_sigma = 0.2;
  int likelihood_max_cells = 200;
  double map_rate = 1.0;
  double process_sigma = 0.005;
  double rloc_sigma = 0.5;
  double beacon_ema_alpha = 0.3;

  int k_candidates = 3;
  int graph_cap = 64;
  double motion_margin = 0.3;

  int inflation_depth = 2;
  int hough_votes = 8;
  double corner_max_distance = 3.0;

  int heading_alignment = 1;  // snap heading drift to rectilinear wall lines
  int k_share = 5;
  int plan_every = 10;
  double lambda_peer = 0.5;
  int evidence_beam_stride = 6;

  double odom_sigma_v = 0.02;
  double odom_sigma_w = 0.02;

  std::string localization_mode = "full";  // full | rloc_only
  std::string baseline = "none";           // none | frontier

  void apply_default_starts();
  void validate() const;  // throws ConfigError
};

// Parses `key = value` lines; '#' starts a comment. Errors carry line numbers.
ScenarioConfig parse_scenario(const std::string& text);
ScenarioConfig load_scenario(const std::string& path);
std::string scenario_to_text(const ScenarioConfig& config);

}  // namespace seal
