#pragma once

#include <optional>
#include <set>
#include <vector>

#include "seal/geometry.hpp"
#include "seal/gp.hpp"

namespace seal {

// Observed and inferred cell sets feeding boundary prediction.
struct CellSets {
  std::set<CellIndex> free_observed;      // O_f
  std::set<CellIndex> occupied_observed;  // O_o
  std::set<CellIndex> inferred_corners;   // I_o
  std::set<CellIndex> inflated;           // I_f (superset of O_o and I_o)
};

// Counter-clockwise convex hull (monotone chain); collinear interior points
// are dropped. Degenerate inputs yield a point or segment.
std::vector<Vec2> convex_hull(std::vector<Vec2> points);

struct HoughLine {
  double rho = 0.0;    // signed distance, x cos(theta) + y sin(theta) = rho
  double theta = 0.0;  // normal angle in [0, pi)
  Vec2 p0, p1;         // extent of the supporting points
  int support = 0;
};

struct HoughParams {
  double rho_resolution = 0.2;          // meters (grid resolution)
  double theta_resolution = M_PI / 180.0;
  int vote_threshold = 8;
  std::uint64_t seed = 1;               // sampling order seed
};

// Probabilistic Hough transform: seeded random point sampling into a
// (rho, theta) accumulator; supporting points are refit by total least
// squares and removed once a line is extracted.
std::vector<HoughLine> hough_lines(const std::vector<Vec2>& cells,
                                   const HoughParams& params);

// Pairwise line intersections kept when within max_corner_distance of the
// closest observed point and inside the grid; snapped to cells.
std::vector<CellIndex> line_intersections(const std::vector<HoughLine>& lines,
                                          double max_corner_distance,
                                          const std::vector<Vec2>& observed,
                                          const GridDims& dims);

// Half-plane facet of the linearized hull: dot(normal, x) <= offset with the
// outward unit normal.
struct Facet {
  Vec2 normal;
  double offset = 0.0;

  double violation(const Vec2& p) const { return dot(normal, p) - offset; }
};

enum class PredState : std::uint8_t {
  Unknown = 0,
  ObservedFree,
  ObservedWall,
  PredictedFree,
  PredictedWall,
  InferredObstacle,
};

struct HullModel {
  std::vector<Vec2> vertices;         // CCW hull of observations + corners
  std::vector<HoughLine> wall_lines;  // L_o
  std::vector<CellIndex> corners;     // I_o
  std::vector<Facet> facets;          // L_C, empty when the hull is degenerate
  bool linear = false;                // hull has < 3 vertices
  GridDims dims;
  std::vector<PredState> prediction;  // per-cell layer, never overwrites observations
  std::set<CellIndex> inflated;       // I_f

  bool inside(const Vec2& p, double tol = 1e-9) const {
    if (facets.empty()) return false;
    for (const Facet& f : facets)
      if (f.violation(p) > tol) return false;
    return true;
  }
};

struct BoundaryParams {
  HoughParams hough;
  double max_corner_distance = 3.0;  // meters
  int inflation_depth = 2;           // cells, Chebyshev
};

// Chebyshev dilation of the source set by `depth` cells, clipped to the grid.
std::set<CellIndex> inflate(const std::set<CellIndex>& source, int depth,
                            const GridDims& dims);

// Full Alg-2 pipeline: hull of observations, wall lines on the hull contour,
// corner prediction, re-hull, prediction layer, inflation, and (given an ego
// cell) flood-fill labelling of unreachable interior regions.
HullModel predict_boundary(const CellSets& observed, const GridDims& dims,
                           const BoundaryParams& params,
                           std::optional<CellIndex> ego = std::nullopt);

// H-representation of the hull: one outward facet inequality per edge.
// Hulls with < 3 vertices pass through with the linear flag set.
std::vector<Facet> linearize_hull(HullModel& model);

struct PeerState {
  Vec2 position;
  std::optional<CellIndex> goal;
};

struct FrontierChoice {
  CellIndex cell;
  double score = 0.0;
};

// Next-best unexplored in-hull cell: minimizes distance-to-ego minus
// lambda * distance to the nearest peer claim. Ties break in (row, col)
// order. Returns nullopt when no frontier remains (exploration complete).
std::optional<FrontierChoice> select_next_region(const HullModel& model,
                                                 const BeliefGrid& belief,
                                                 const std::vector<PeerState>& peers,
                                                 const Vec2& ego,
                                                 double lambda = 0.5);

}  // namespace seal
