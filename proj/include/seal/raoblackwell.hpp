#pragma once

#include <vector>

#include "seal/geometry.hpp"
#include "seal/gp.hpp"

namespace seal {

struct PoseHypothesis {
  Vec2 position;
  double weight = 0.0;
};

// Weighted-hypothesis position belief. Weights sum to 1 after every update;
// psi records the pre-normalization mass of the last update.
struct PoseBelief {
  std::vector<PoseHypothesis> hypotheses;
  double psi = 1.0;
  bool degenerate = false;  // set when an update underflowed and reset to uniform

  static PoseBelief uniform_at(const Vec2& p, int n);
  void normalize();
  Vec2 mean() const;
  int map_index() const;  // highest-weight hypothesis
};

// One piece of observation evidence, expressed relative to the robot pose so
// it can be evaluated under every hypothesis.
struct EvidenceCell {
  Vec2 offset;         // meters, body-anchored displacement from the pose
  double value = 0.0;  // occupancy evidence in [0, 1]
  double weight = 1.0; // map-update gain; hits are typically weighted above
                       // free-space sweeps so surfaces survive pose jitter
};

struct ObservationSet {
  std::vector<EvidenceCell> cells;
  // Optional RSSI-field consistency term: observed mean beacon power plus a
  // per-hypothesis predicted power (same order as the belief hypotheses).
  bool has_rssi = false;
  double rssi_observed = 0.0;
  std::vector<double> rssi_predicted;
  double rssi_sigma = 3.0;
};

struct RaoBlackwellParams {
  double likelihood_sigma = 0.2;  // belief units
  double map_rate = 1.0;          // confidence_max, base map learning rate
  // Quadrature budget for the likelihood integral: when the evidence set is
  // larger, occupied cells are kept and free cells are subsampled. The map
  // update always consumes the full evidence set.
  std::size_t likelihood_max_cells = SIZE_MAX;
};

// Raw per-hypothesis integrand mass (discretized integral of likelihood
// times prior map belief over the cells each hypothesis observes), before
// normalization. All-zero mass falls back to uniform.
std::vector<double> sample_weights(const PoseBelief& belief, const BeliefGrid& map,
                                   const ObservationSet& obs,
                                   const RaoBlackwellParams& params);

// Posterior pose belief: prior weight times integrand mass, renormalized.
PoseBelief update_pose_belief(const PoseBelief& prior, const BeliefGrid& map,
                              const ObservationSet& obs,
                              const RaoBlackwellParams& params);

// Shannon entropy of the normalized weights, in nats; 0 log 0 := 0.
double pose_entropy(const PoseBelief& belief);

// Writes evidence into the map under every pose hypothesis, at a learning
// rate attenuated by exp(-H / log N_s).
BeliefGrid update_map_belief(const BeliefGrid& map, const PoseBelief& belief,
                             const ObservationSet& obs,
                             const RaoBlackwellParams& params);

struct JointBelief {
  PoseBelief pose;
  BeliefGrid map;
};

// Pose update first, then the map update conditioned on the posterior
// pose belief (the factorization direction of the joint posterior).
JointBelief joint_update(const JointBelief& joint, const ObservationSet& obs,
                         const RaoBlackwellParams& params);

}  // namespace seal
