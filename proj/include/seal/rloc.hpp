#pragma once

#include <optional>
#include <vector>

#include "seal/geometry.hpp"
#include "seal/world.hpp"

namespace seal {

// Inverse of the log-distance channel. Range variance by first-order
// propagation of the shadowing sigma; RSSI above p0 floors the range at d0.
struct RangeEstimate {
  double range = 0.0;     // meters
  double variance = 0.0;  // m^2
};
RangeEstimate rssi_to_range(double rssi_dbm, const RssiChannel& channel);

struct RangeMeasurement {
  int a = 0;
  int b = 0;
  double rssi_dbm = 0.0;  // symmetric (directions averaged)
  double range = 0.0;
  double variance = 0.0;
};

// Weighted undirected relative-position measurement graph.
struct Rpmg {
  int n = 0;
  std::vector<RangeMeasurement> edges;
  std::vector<double> adjacency;  // n*n, a_ij = a_ji, a_ii = 0
  bool disconnected = false;
  int components = 1;

  double a(int i, int j) const { return adjacency[i * n + j]; }
  double degree(int i) const;
  // L = D - A; rows sum to zero.
  std::vector<double> laplacian() const;
};

// Edge kept iff rssi >= connectivity_threshold; weight a_ij = 1/variance.
Rpmg build_rpmg(int n, const std::vector<RangeMeasurement>& ranges,
                double connectivity_threshold_dbm);

struct MotionConstraint {
  double v_max = 0.2;
  double dt = 0.1;
  double margin = 0.3;  // meters added to the reachable disc

  double radius() const { return v_max * dt + margin; }
};

struct Candidate {
  Vec2 position;
  double score = 0.0;  // annulus-agreement cost, lower is better
};

// Expanded graph: k motion-feasible candidates per robot plus the candidate
// graphs (assignments) enumerated in prior-cost order up to a cap.
struct Erpmg {
  Rpmg rpmg;
  std::vector<std::vector<Candidate>> candidates;  // per robot
  std::vector<std::vector<int>> graphs;            // candidate index per robot
  std::vector<Vec2> previous;                      // motion anchors used
  MotionConstraint motion;
  int ego = 0;
};

// Candidates are sampled on a deterministic lattice over each robot's
// motion-reachable disc and scored by agreement with the range annuli around
// the neighbours' previous positions. Robots with no range edge keep their
// motion prediction as the sole candidate.
Erpmg expand_to_erpmg(const Rpmg& rpmg, const std::vector<Vec2>& previous,
                      const MotionConstraint& motion, int k, int ego = 0,
                      int graph_cap = 64, double lattice_step = 0.1);

struct PositionEstimate {
  int robot = 0;
  Vec2 position;
  double belief = 0.0;
};

struct GraphSolution {
  std::vector<Vec2> positions;
  double residual = 0.0;
  double belief = 0.0;
  bool converged = true;
};

struct OptimizeResult {
  std::vector<GraphSolution> graphs;  // one per candidate graph
  int best = 0;
  bool converged = true;  // best graph converged
  // Per-robot hypothesis marginals; each robot's beliefs sum to 1.
  std::vector<std::vector<PositionEstimate>> marginals;

  const std::vector<Vec2>& best_positions() const { return graphs[best].positions; }
};

struct OptimizeOptions {
  int max_iters = 50;
  double grad_tol = 1e-8;
  std::optional<GridDims> workspace;  // projection bounds, if any
  bool constrain_motion_disc = true;  // project onto the reachable disc
};

// Per candidate graph: damped Gauss-Newton on the weighted range residuals
// with the ego vertex fixed at its candidate (gauge anchor). Graph beliefs
// are proportional to exp(-residual/2).
OptimizeResult optimize_graph(const Erpmg& erpmg, const OptimizeOptions& opts = {});

}  // namespace seal
