#pragma once

#include <memory>
#include <string>
#include <vector>

#include "seal/agent.hpp"
#include "seal/metrics.hpp"
#include "seal/scenario.hpp"
#include "seal/world.hpp"

namespace seal {

// Synchronous lockstep simulation: the world advances, robots sense, the bus
// exchanges messages, every agent steps, until the budget runs out or all
// robots vote completion for three consecutive rounds.
class Simulation {
 public:
  explicit Simulation(const ScenarioConfig& config);

  RunReport run();

  const WorldMap& world() const { return world_; }
  const std::vector<std::string>& events() const { return events_; }
  const AgentBase& agent(int i) const { return *agents_[i]; }
  const std::vector<Pose2D>& true_poses() const { return true_poses_; }
  const std::vector<std::vector<Vec2>>& estimated_trajectories() const {
    return est_traj_;
  }
  const std::vector<std::vector<Vec2>>& true_trajectories() const {
    return true_traj_;
  }
  // Wall-clock seconds per agent-0 step; diagnostics only, never serialized.
  const std::vector<double>& agent0_step_seconds() const { return agent0_times_; }

  void write_artifacts(const std::string& out_dir, const RunReport& report) const;

 private:
  void exchange_and_step(long step);

  ScenarioConfig cfg_;
  WorldMap world_;
  std::vector<std::unique_ptr<AgentBase>> agents_;
  std::vector<Pose2D> true_poses_;
  std::vector<VelocityCommand> pending_cmd_;
  std::vector<std::vector<Message>> pending_out_;
  std::vector<bool> blocked_;
  std::vector<double> executed_v_;
  std::vector<double> executed_w_;
  std::vector<double> distances_;
  std::vector<bool> no_frontier_;
  std::vector<std::vector<Vec2>> est_traj_;
  std::vector<std::vector<Vec2>> true_traj_;
  std::vector<std::uint8_t> team_explored_;
  std::vector<SeriesPoint> series_;
  std::vector<std::string> events_;
  std::vector<double> agent0_times_;
  long steps_done_ = 0;
  bool completed_ = false;
};

// Runs a scenario end to end; when out_dir is non-empty the maps, trajectory
// CSV, metrics JSON, and event log are written there.
RunReport run_simulation(const ScenarioConfig& config,
                         const std::string& out_dir = "");

}  // namespace seal
