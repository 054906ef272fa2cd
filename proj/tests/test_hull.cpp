#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "seal/hull.hpp"
#include "seal/rng.hpp"

using namespace seal;

namespace {

bool contains_point(const std::vector<Vec2>& set, const Vec2& p, double tol = 1e-9) {
  for (const Vec2& v : set)
    if (distance(v, p) <= tol) return true;
  return false;
}

HullModel model_from_vertices(std::vector<Vec2> verts, const GridDims& dims) {
  HullModel m;
  m.dims = dims;
  m.vertices = convex_hull(std::move(verts));
  m.prediction.assign(dims.size(), PredState::Unknown);
  linearize_hull(m);
  return m;
}

}  // namespace

TEST_SUITE_BEGIN("hull");

TEST_CASE("unit square corners keep the hull, the center does not") {
  const auto hull =
      convex_hull({{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}});
  REQUIRE(hull.size() == 4);
  CHECK_FALSE(contains_point(hull, {0.5, 0.5}));
  for (const Vec2& corner : {Vec2{0, 0}, Vec2{1, 0}, Vec2{1, 1}, Vec2{0, 1}})
    CHECK(contains_point(hull, corner));
}

TEST_CASE("hull vertices are ordered counter-clockwise") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vec2> pts;
    for (int i = 0; i < 30; ++i) pts.push_back({rng.uniform(0, 10), rng.uniform(0, 10)});
    const auto hull = convex_hull(pts);
    REQUIRE(hull.size() >= 3);
    for (std::size_t i = 0; i < hull.size(); ++i) {
      const Vec2& a = hull[i];
      const Vec2& b = hull[(i + 1) % hull.size()];
      const Vec2& c = hull[(i + 2) % hull.size()];
      CHECK(cross(b - a, c - b) > 0.0);  // strict left turns, no collinear runs
    }
  }
}

TEST_CASE("collinear input degenerates to the two endpoints") {
  const auto hull = convex_hull({{0, 0}, {1, 1}, {2, 2}, {3, 3}});
  REQUIRE(hull.size() == 2);
  CHECK(contains_point(hull, {0, 0}));
  CHECK(contains_point(hull, {3, 3}));
}

TEST_CASE("single point and duplicates degenerate to one vertex") {
  CHECK(convex_hull({{2, 3}}).size() == 1);
  CHECK(convex_hull({{2, 3}, {2, 3}, {2, 3}}).size() == 1);
}

TEST_CASE("monotone chain matches the brute-force hull on random instances") {
  Rng rng(2718);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Vec2> pts;
    const int n = 4 + rng.uniform_int(30);
    for (int i = 0; i < n; ++i)
      pts.push_back({rng.uniform(0, 100), rng.uniform(0, 100)});
    const auto fast = convex_hull(pts);
    const auto slow = oracles::brute_force_hull_vertices(pts);
    REQUIRE(fast.size() == slow.size());
    for (const Vec2& v : slow) CHECK(contains_point(fast, v));
  }
}

TEST_CASE("twenty cells on y=3 produce one line at theta 90 deg") {
  std::vector<Vec2> cells;
  for (int i = 0; i < 20; ++i) cells.push_back({0.2 * i, 3.0});
  HoughParams params;
  params.rho_resolution = 0.2;
  const auto lines = hough_lines(cells, params);
  REQUIRE(lines.size() == 1);
  CHECK(std::abs(lines[0].theta - M_PI / 2) <= M_PI / 180.0 + 1e-9);
  CHECK(std::abs(lines[0].rho - 3.0) <= 0.2 + 1e-9);
  CHECK(lines[0].support == 20);
}

TEST_CASE("two perpendicular walls produce two lines 90 deg apart") {
  std::vector<Vec2> cells;
  for (int i = 0; i < 15; ++i) {
    cells.push_back({0.2 * i, 2.0});  // horizontal wall
    cells.push_back({5.0, 2.0 + 0.2 * i});  // vertical wall
  }
  HoughParams params;
  params.rho_resolution = 0.2;
  const auto lines = hough_lines(cells, params);
  REQUIRE(lines.size() == 2);
  double sep = std::abs(lines[0].theta - lines[1].theta);
  sep = std::min(sep, M_PI - sep);
  CHECK(std::abs(sep - M_PI / 2) <= 2.0 * M_PI / 180.0);
}

TEST_CASE("scattered cells below the vote threshold give no lines") {
  HoughParams params;
  const auto lines = hough_lines({{0, 0}, {3, 7}, {9, 2}}, params);
  CHECK(lines.empty());
}

TEST_CASE("hough sampling is deterministic under a fixed seed") {
  Rng rng(4);
  std::vector<Vec2> cells;
  for (int i = 0; i < 40; ++i)
    cells.push_back({0.2 * i + rng.gaussian(0.02), 3.0 + rng.gaussian(0.02)});
  HoughParams params;
  params.seed = 77;
  const auto a = hough_lines(cells, params);
  const auto b = hough_lines(cells, params);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].rho == b[i].rho);
    CHECK(a[i].theta == b[i].theta);
  }
}

TEST_CASE("perpendicular lines intersect at the corner cell") {
  HoughLine h;  // y = 5
  h.theta = M_PI / 2;
  h.rho = 5.0;
  HoughLine v;  // x = 5
  v.theta = 0.0;
  v.rho = 5.0;
  const GridDims dims{50, 50, 0.2};
  const auto corners = line_intersections({h, v}, 3.0, {{4.0, 5.0}}, dims);
  REQUIRE(corners.size() == 1);
  CHECK(corners[0] == dims.cell_at({5.0, 5.0}));
}

TEST_CASE("parallel lines yield no intersection") {
  HoughLine a;
  a.theta = M_PI / 2;
  a.rho = 5.0;
  HoughLine b;
  b.theta = M_PI / 2;
  b.rho = 7.0;
  const GridDims dims{50, 50, 0.2};
  CHECK(line_intersections({a, b}, 3.0, {{4, 5}}, dims).empty());
}

TEST_CASE("distant intersections are rejected by the corner cap") {
  HoughLine h;
  h.theta = M_PI / 2;
  h.rho = 5.0;
  HoughLine v;
  v.theta = 0.0;
  v.rho = 5.0;
  const GridDims dims{100, 100, 0.2};
  // nearest observation 10 m away from (5,5)
  CHECK(line_intersections({h, v}, 3.0, {{15.0, 5.0}}, dims).empty());
}

TEST_CASE("inflation covers the source and stays within depth") {
  const GridDims dims{20, 20, 0.5};
  std::set<CellIndex> source = {{5, 5}, {10, 7}};
  const auto inflated = inflate(source, 2, dims);
  for (const CellIndex& c : source) CHECK(inflated.count(c) == 1);
  for (const CellIndex& c : inflated) {
    int best = 1000;
    for (const CellIndex& s : source)
      best = std::min(best, std::max(std::abs(c.cx - s.cx), std::abs(c.cy - s.cy)));
    CHECK(best <= 2);
  }
}

TEST_CASE("unit square hull linearizes to four axis-aligned facets") {
  const GridDims dims{20, 20, 0.5};
  HullModel m = model_from_vertices({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, dims);
  REQUIRE(m.facets.size() == 4);
  CHECK_FALSE(m.linear);
  int axis_normals = 0;
  for (const Facet& f : m.facets) {
    if (std::abs(std::abs(f.normal.x) - 1.0) < 1e-12 ||
        std::abs(std::abs(f.normal.y) - 1.0) < 1e-12)
      ++axis_normals;
    // offsets are the extents 0 or 1 (b = n . vertex)
    CHECK((std::abs(f.offset) < 1e-12 || std::abs(f.offset - 1.0) < 1e-12));
  }
  CHECK(axis_normals == 4);
  // every hull vertex satisfies all inequalities
  for (const Vec2& v : m.vertices)
    for (const Facet& f : m.facets) CHECK(f.violation(v) <= 1e-9);
}

TEST_CASE("triangle centroid strictly satisfies all facets") {
  const GridDims dims{20, 20, 0.5};
  HullModel m = model_from_vertices({{0, 0}, {4, 0}, {1, 3}}, dims);
  REQUIRE(m.facets.size() == 3);
  const Vec2 centroid{(0 + 4 + 1) / 3.0, (0 + 0 + 3) / 3.0};
  for (const Facet& f : m.facets) CHECK(f.violation(centroid) < -1e-6);
}

TEST_CASE("two-vertex hull passes through with the linear flag") {
  const GridDims dims{20, 20, 0.5};
  HullModel m = model_from_vertices({{0, 0}, {2, 2}}, dims);
  CHECK(m.linear);
  CHECK(m.facets.empty());
  CHECK(m.vertices.size() == 2);
}

TEST_CASE("facets classify interior and exterior probes with zero errors") {
  Rng rng(1234);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Vec2> pts;
    for (int i = 0; i < 20; ++i)
      pts.push_back({rng.uniform(2, 18), rng.uniform(2, 18)});
    const GridDims dims{40, 40, 0.5};
    HullModel m = model_from_vertices(pts, dims);
    if (m.linear) continue;
    Vec2 centroid;
    for (const Vec2& v : m.vertices) centroid += v;
    centroid = centroid * (1.0 / m.vertices.size());
    // interior probes: shrink vertices toward the centroid
    for (const Vec2& v : m.vertices) {
      const Vec2 inside = centroid + (v - centroid) * 0.9;
      CHECK(m.inside(inside));
    }
    // exterior probes: push one cell beyond each facet
    for (const Facet& f : m.facets) {
      const Vec2 outside{centroid.x + f.normal.x * 100.0,
                         centroid.y + f.normal.y * 100.0};
      CHECK_FALSE(m.inside(outside));
    }
  }
}

TEST_CASE("re-hull containment: corners only grow the hull") {
  CellSets sets;
  const GridDims dims{60, 60, 0.2};
  // partially observed L-shaped room: two walls visible
  for (int i = 5; i < 45; ++i) {
    sets.occupied_observed.insert({i, 5});
    sets.occupied_observed.insert({5, i});
  }
  for (int x = 6; x < 30; ++x)
    for (int y = 6; y < 30; ++y) sets.free_observed.insert({x, y});

  std::vector<Vec2> base_pts;
  for (const CellIndex& c : sets.free_observed) base_pts.push_back(dims.center(c));
  for (const CellIndex& c : sets.occupied_observed) base_pts.push_back(dims.center(c));
  const auto base_hull = convex_hull(base_pts);

  BoundaryParams params;
  params.hough.rho_resolution = dims.resolution;
  const HullModel m = predict_boundary(sets, dims, params);

  // every vertex of the base hull is inside (or on) the predicted hull
  for (const Vec2& v : base_hull) CHECK(m.inside(v, 1e-6));
  // inflation covers all observed walls
  for (const CellIndex& c : sets.occupied_observed) CHECK(m.inflated.count(c) == 1);
}

TEST_CASE("fully observed rectangular room reproduces its boundary") {
  CellSets sets;
  const GridDims dims{60, 60, 0.2};
  const int x0 = 10, x1 = 40, y0 = 10, y1 = 35;
  for (int x = x0; x <= x1; ++x) {
    sets.occupied_observed.insert({x, y0});
    sets.occupied_observed.insert({x, y1});
  }
  for (int y = y0; y <= y1; ++y) {
    sets.occupied_observed.insert({x0, y});
    sets.occupied_observed.insert({x1, y});
  }
  for (int x = x0 + 1; x < x1; ++x)
    for (int y = y0 + 1; y < y1; ++y) sets.free_observed.insert({x, y});

  BoundaryParams params;
  params.hough.rho_resolution = dims.resolution;
  const HullModel m = predict_boundary(sets, dims, params);

  CHECK(m.wall_lines.size() >= 2);
  // predicted boundary coincides with the walls within one cell
  for (const Vec2& v : m.vertices) {
    const double dx = std::min(std::abs(v.x - dims.center({x0, 0}).x),
                               std::abs(v.x - dims.center({x1, 0}).x));
    const double dy = std::min(std::abs(v.y - dims.center({0, y0}).y),
                               std::abs(v.y - dims.center({0, y1}).y));
    CHECK(std::min(dx, dy) <= dims.resolution + 1e-9);
  }
  // observations stay untouched in the prediction layer
  for (const CellIndex& c : sets.free_observed)
    CHECK(m.prediction[dims.index(c)] == PredState::ObservedFree);
  for (const CellIndex& c : sets.occupied_observed)
    CHECK(m.prediction[dims.index(c)] == PredState::ObservedWall);
}

TEST_CASE("no occupied observations: hull of free space, no wall lines") {
  CellSets sets;
  const GridDims dims{40, 40, 0.2};
  for (int x = 10; x < 20; ++x)
    for (int y = 10; y < 20; ++y) sets.free_observed.insert({x, y});
  BoundaryParams params;
  const HullModel m = predict_boundary(sets, dims, params);
  CHECK(m.wall_lines.empty());
  CHECK(m.corners.empty());
  CHECK(m.vertices.size() >= 3);
}

TEST_CASE("single robot picks the only unexplored in-hull cell") {
  const GridDims dims{10, 10, 1.0};
  HullModel m = model_from_vertices(
      {{0.5, 0.5}, {8.5, 0.5}, {8.5, 8.5}, {0.5, 8.5}}, dims);
  BeliefGrid belief = BeliefGrid::unknown(dims);
  for (std::size_t i = 0; i < belief.explored.size(); ++i) belief.explored[i] = 1;
  belief.explored[dims.index({4, 4})] = 0;
  const auto choice = select_next_region(m, belief, {}, {1.0, 1.0});
  REQUIRE(choice.has_value());
  CHECK(choice->cell == CellIndex{4, 4});
}

TEST_CASE("two robots claim distinct symmetric regions") {
  const GridDims dims{20, 10, 1.0};
  HullModel m = model_from_vertices(
      {{0.5, 0.5}, {19.0, 0.5}, {19.0, 9.0}, {0.5, 9.0}}, dims);
  BeliefGrid belief = BeliefGrid::unknown(dims);
  for (std::size_t i = 0; i < belief.explored.size(); ++i) belief.explored[i] = 1;
  belief.explored[dims.index({2, 5})] = 0;   // left region
  belief.explored[dims.index({17, 5})] = 0;  // right region

  const Vec2 left_robot{5.0, 5.0};
  const Vec2 right_robot{14.0, 5.0};
  const auto left_pick = select_next_region(
      m, belief, {{right_robot, std::nullopt}}, left_robot);
  const auto right_pick = select_next_region(
      m, belief, {{left_robot, std::nullopt}}, right_robot);
  REQUIRE(left_pick.has_value());
  REQUIRE(right_pick.has_value());
  CHECK(left_pick->cell == CellIndex{2, 5});
  CHECK(right_pick->cell == CellIndex{17, 5});
  CHECK_FALSE(left_pick->cell == right_pick->cell);
}

TEST_CASE("everything explored signals completion") {
  const GridDims dims{10, 10, 1.0};
  HullModel m = model_from_vertices(
      {{0.5, 0.5}, {8.5, 0.5}, {8.5, 8.5}, {0.5, 8.5}}, dims);
  BeliefGrid belief = BeliefGrid::unknown(dims);
  for (std::size_t i = 0; i < belief.explored.size(); ++i) belief.explored[i] = 1;
  CHECK_FALSE(select_next_region(m, belief, {}, {1, 1}).has_value());
}

TEST_CASE("ties break deterministically in row-column order") {
  const GridDims dims{10, 10, 1.0};
  HullModel m = model_from_vertices(
      {{0.5, 0.5}, {8.5, 0.5}, {8.5, 8.5}, {0.5, 8.5}}, dims);
  BeliefGrid belief = BeliefGrid::unknown(dims);
  for (std::size_t i = 0; i < belief.explored.size(); ++i) belief.explored[i] = 1;
  // two cells equidistant from the ego
  belief.explored[dims.index({3, 5})] = 0;
  belief.explored[dims.index({5, 3})] = 0;
  const auto choice = select_next_region(m, belief, {}, {4.5, 4.5});
  REQUIRE(choice.has_value());
  CHECK(choice->cell == CellIndex{5, 3});  // lower row wins
}

TEST_SUITE_END();
