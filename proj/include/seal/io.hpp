#pragma once

#include <string>
#include <vector>

#include "seal/agent.hpp"
#include "seal/gp.hpp"
#include "seal/hull.hpp"

namespace seal {

void write_pgm_gray(const std::string& path, const GridDims& dims,
                    const std::vector<std::uint8_t>& gray);

// Exploration-confidence map scaled 0-255.
void write_belief_pgm(const BeliefGrid& belief, const std::string& path);

// Occupancy + prediction layer in the fixed gray bands: observed-free 255,
// predicted-free 200, unknown 128, predicted-wall 64, observed-wall 0.
void write_map_pgm(const BeliefGrid& belief, const HullModel* hull,
                   const std::string& path);

void write_belief_csv(const BeliefGrid& belief, const std::string& path);

// GeoJSON-style polygon of the predicted boundary, for plotting.
std::string hull_to_geojson(const HullModel& model);

}  // namespace seal
