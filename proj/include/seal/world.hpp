#pragma once

#include <string>
#include <vector>

#include "seal/geometry.hpp"
#include "seal/rng.hpp"

namespace seal {

enum class CellState : std::uint8_t { Free = 0, Occupied = 1 };

// Ground-truth occupancy grid. Immutable after load; all sensing operations
// are read-only so robots can query it concurrently.
struct WorldMap {
  GridDims dims;
  std::vector<CellState> cells;

  bool occupied(const CellIndex& c) const {
    return !dims.in_bounds(c) || cells[dims.index(c)] == CellState::Occupied;
  }
  bool occupied_at(const Vec2& p) const { return occupied(dims.cell_at(p)); }
  void set(const CellIndex& c, CellState s) { cells[dims.index(c)] = s; }

  // Enforces the closed-world invariants: positive resolution, occupied
  // boundary ring, at least one free cell.
  void validate() const;
};

WorldMap make_empty_world(double width_m, double height_m, double resolution);
// 20 m x 20 m retail floor: perimeter walls plus rows of shelf blocks.
WorldMap make_bookstore(double resolution = 0.2);
// 20 m x 20 m four-room floor plan with door gaps.
WorldMap make_house(double resolution = 0.2);

// '#' occupied, '.' free; first text row is the top of the map.
WorldMap parse_world_ascii(const std::string& text, double resolution);
// PGM P2/P5, 0 = occupied, 255 = free (threshold at 128).
WorldMap load_world_pgm(const std::string& path, double resolution);
WorldMap load_world(const std::string& spec, double resolution);
void write_world_pgm(const WorldMap& world, const std::string& path);

struct SensorSpec {
  double fov = M_PI;             // radians
  double range_max = 5.0;        // meters
  int beam_count = 1500;
  double range_noise_sigma = 0.0;  // meters
};

struct LidarScan {
  Pose2D origin;
  std::vector<double> ranges;  // meters, = range_max where !hit
  std::vector<bool> hit;
};

struct RssiChannel {
  double p0_dbm = -40.0;       // power at reference distance
  double d0 = 1.0;             // reference distance, meters
  double path_loss_exponent = 2.0;
  double shadowing_sigma_db = 2.0;
};

struct VelocityCommand {
  double v = 0.0;  // m/s
  double w = 0.0;  // rad/s
};

struct MotionLimits {
  double v_max = 0.2;  // m/s
  double w_max = 0.8;  // rad/s
};

struct StepResult {
  Pose2D pose;
  bool blocked = false;
  double distance = 0.0;  // path length actually travelled
};

// Closed-form unicycle integration with the commanded velocities clamped to
// the limits. No collision handling.
Pose2D step_kinematics(const Pose2D& pose, const VelocityCommand& cmd, double dt,
                       const MotionLimits& limits = {});

// Same integration, collision-checked against the world: motion stops at the
// last free pose along the arc and the result is flagged blocked.
StepResult step_kinematics(const WorldMap& world, const Pose2D& pose,
                           const VelocityCommand& cmd, double dt,
                           const MotionLimits& limits = {});

// Ray-marched scan at sub-cell steps (resolution/2). Gaussian range noise is
// added to hits and clamped into (0, range_max]. Throws PoseInsideObstacleError
// when the origin cell is occupied.
LidarScan cast_lidar(const WorldMap& world, const Pose2D& pose,
                     const SensorSpec& spec, Rng& rng);

// Log-distance path loss with Gaussian shadowing; distance floored at d0.
double sample_rssi(const RssiChannel& channel, const Vec2& tx, const Vec2& rx,
                   Rng& rng);

// Noise-free expected RSSI at distance d.
double mean_rssi(const RssiChannel& channel, double d);

}  // namespace seal
