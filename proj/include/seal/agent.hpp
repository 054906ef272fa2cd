#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "seal/geometry.hpp"
#include "seal/gp.hpp"
#include "seal/hull.hpp"
#include "seal/raoblackwell.hpp"
#include "seal/rloc.hpp"
#include "seal/scenario.hpp"
#include "seal/world.hpp"

namespace seal {

enum class MessageKind : int { RssiBeacon = 0, GpShare = 1, HullShare = 2 };

enum class GpField : int { Occupancy = 0, Rssi = 1 };

struct GpSharePayload {
  GpField field = GpField::Occupancy;
  std::vector<GpSample> samples;
  Kernel kernel;
};

// Inter-robot message. Delivery is gated by the connectivity threshold at
// send time and ordered by (sender id, kind) within a step.
struct Message {
  MessageKind kind = MessageKind::RssiBeacon;
  int sender = -1;
  long step = 0;
  double rssi_dbm = 0.0;                 // RssiBeacon: power measured at receiver
  std::optional<GpSharePayload> gp;      // GpShare
  std::optional<CellIndex> goal_claim;   // HullShare
};

struct AgentInputs {
  long step = 0;
  LidarScan scan;                 // physical scan; the agent interprets ranges
                                  // relative to its own believed pose
  std::vector<Message> inbox;
  double odo_v = 0.0;             // noisy executed velocities (odometry)
  double odo_w = 0.0;
  bool blocked = false;
};

struct AgentOutputs {
  VelocityCommand command;
  std::vector<Message> outbox;
  bool no_frontier = false;
  std::vector<std::string> events;
};

struct TrajectoryRow {
  long step = 0;
  int robot = 0;
  double x = 0.0;
  double y = 0.0;
  double belief = 0.0;    // weight of the MAP hypothesis
  double residual = 0.0;  // best candidate-graph residual this step
};

// Pipelines A (GP exploration) and B (relative localization) are
// data-independent; either execution order produces identical results.
enum class PipelineOrder { AThenB, BThenA };

class AgentBase {
 public:
  virtual ~AgentBase() = default;
  virtual AgentOutputs step(const AgentInputs& inputs,
                            PipelineOrder order = PipelineOrder::AThenB) = 0;
  virtual int id() const = 0;
  virtual Vec2 estimate() const = 0;
  virtual const BeliefGrid& belief() const = 0;
  virtual const std::vector<TrajectoryRow>& trajectory() const = 0;
  virtual double last_entropy() const { return 0.0; }
  virtual double last_psi() const { return 1.0; }
  virtual const HullModel* hull_model() const { return nullptr; }
  // Deliverable occupancy map; defaults to the live belief.
  virtual BeliefGrid final_map() const { return belief(); }
};

// Distributed SEAL loop for one robot: GP fusion pipeline, RSSI localization
// pipeline, Rao-Blackwellized join, hull-based frontier selection, and the
// outgoing message schedule.
class RobotAgent : public AgentBase {
 public:
  RobotAgent(int id, const ScenarioConfig& config, const GridDims& dims);

  AgentOutputs step(const AgentInputs& inputs,
                    PipelineOrder order = PipelineOrder::AThenB) override;

  int id() const override { return id_; }
  Vec2 estimate() const override { return pose_belief_.mean(); }
  const BeliefGrid& belief() const override { return belief_; }
  const PoseBelief& pose_belief() const { return pose_belief_; }
  const std::vector<TrajectoryRow>& trajectory() const override {
    return trajectory_;
  }
  double last_entropy() const override { return last_entropy_; }
  double last_psi() const override { return last_psi_; }
  const HullModel* hull_model() const override {
    return hull_valid_ ? &hull_ : nullptr;
  }
  BeliefGrid final_map() const override;
  const Pose2D& odometry() const { return odom_; }

 private:
  struct PipelineAOut {
    FusedField field;
    bool field_valid = false;
    std::vector<double> rssi_predicted;  // per hypothesis
    bool rssi_valid = false;
    double rssi_observed = 0.0;
  };
  struct PipelineBOut {
    std::vector<PositionEstimate> ego_hypotheses;
    std::vector<Vec2> peer_positions;
    std::vector<bool> peer_updated;
    double residual = 0.0;
    bool valid = false;
    bool converged = true;
  };

  void ingest(const AgentInputs& inputs);
  PipelineAOut pipeline_a() const;
  PipelineBOut pipeline_b() const;
  void join(const PipelineAOut& a, const PipelineBOut& b);
  void plan();
  VelocityCommand control();
  std::vector<Message> make_outbox();

  void refit_models();
  std::vector<GpSample> occ_training_set() const;
  std::vector<int> fusion_window_cells() const;
  bool traversable(const CellIndex& c) const;
  std::vector<CellIndex> astar(const CellIndex& start, const CellIndex& goal) const;

  int id_;
  ScenarioConfig cfg_;
  GridDims dims_;
  long step_ = 0;

  Pose2D odom_;
  Vec2 odom_delta_;  // this step's odometry displacement

  PoseBelief pose_belief_;
  BeliefGrid belief_;
  std::vector<std::uint8_t> self_observed_;

  // Occupancy evidence, grid-binned to bound the GP training set.
  struct Bin {
    double sum = 0.0;
    int count = 0;
  };
  std::map<std::pair<int, int>, Bin> occ_bins_;
  double bin_size_;
  std::set<CellIndex> wall_cells_;  // self-observed confident wall cells
  std::vector<GpSample> rssi_samples_;

  std::optional<GpModel> occ_gp_;
  std::optional<GpModel> rssi_gp_;
  bool occ_gp_dirty_ = true;
  bool rssi_gp_dirty_ = true;
  struct ReceivedModel {
    GpSharePayload payload;
    std::optional<GpModel> fitted;
  };
  std::map<int, ReceivedModel> received_occ_;
  std::map<int, ReceivedModel> received_rssi_;
  std::map<int, std::set<CellIndex>> imported_walls_;  // per sender

  std::vector<Vec2> peer_est_;
  std::vector<std::uint8_t> peer_known_;
  std::vector<std::optional<CellIndex>> peer_goals_;
  std::vector<std::pair<int, double>> beacons_;  // (sender, dbm) this step
  std::map<int, double> beacon_ema_;             // smoothed power per sender

  std::vector<EvidenceCell> evidence_;
  bool pose_inputs_ready_ = false;

  HullModel hull_;
  bool hull_valid_ = false;
  std::optional<CellIndex> goal_;
  std::vector<CellIndex> path_;
  std::set<CellIndex> unreachable_;
  int stuck_steps_ = 0;
  int blocked_streak_ = 0;
  Vec2 last_progress_pos_;
  bool no_frontier_ = false;
  bool goal_changed_ = false;
  bool blocked_ = false;

  double heading_bias_ema_ = 0.0;
  double last_entropy_ = 0.0;
  double last_psi_ = 1.0;
  std::vector<TrajectoryRow> trajectory_;
  std::vector<std::string> events_;
};

// The spec-facing entry point for one synchronous round.
inline AgentOutputs agent_step(RobotAgent& agent, const AgentInputs& inputs) {
  return agent.step(inputs);
}

// Dead-reckoning naive-frontier baseline: odometry-only localization, direct
// evidence painting, nearest-frontier goal selection.
class FrontierAgent : public AgentBase {
 public:
  FrontierAgent(int id, const ScenarioConfig& config, const GridDims& dims);

  AgentOutputs step(const AgentInputs& inputs,
                    PipelineOrder order = PipelineOrder::AThenB) override;

  int id() const override { return id_; }
  Vec2 estimate() const override { return odom_.position(); }
  const BeliefGrid& belief() const override { return belief_; }
  const std::vector<TrajectoryRow>& trajectory() const override {
    return trajectory_;
  }

 private:
  bool traversable(const CellIndex& c) const;
  std::vector<CellIndex> astar(const CellIndex& start, const CellIndex& goal) const;

  int id_;
  ScenarioConfig cfg_;
  GridDims dims_;
  long step_ = 0;
  Pose2D odom_;
  BeliefGrid belief_;
  std::optional<CellIndex> goal_;
  std::vector<CellIndex> path_;
  std::set<CellIndex> blacklist_;
  int stuck_steps_ = 0;
  int blocked_streak_ = 0;
  Vec2 last_progress_pos_;
  bool blocked_ = false;
  std::vector<TrajectoryRow> trajectory_;
};

std::unique_ptr<AgentBase> make_agent(int id, const ScenarioConfig& config,
                                      const GridDims& dims);

}  // namespace seal
