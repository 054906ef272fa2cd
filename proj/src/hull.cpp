#include "seal/hull.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "seal/rng.hpp"

namespace seal {

std::vector<Vec2> convex_hull(std::vector<Vec2> points) {
  std::sort(points.begin(), points.end(), [](const Vec2& a, const Vec2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  points.erase(std::unique(points.begin(), points.end()), points.end());
  const std::size_t n = points.size();
  if (n <= 2) return points;

  std::vector<Vec2> hull(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {  // lower chain
    while (k >= 2 &&
           cross(hull[k - 1] - hull[k - 2], points[i] - hull[k - 2]) <= 1e-12)
      --k;
    hull[k++] = points[i];
  }
  for (std::size_t i = n - 1, lower = k + 1; i-- > 0;) {  // upper chain
    while (k >= lower &&
           cross(hull[k - 1] - hull[k - 2], points[i] - hull[k - 2]) <= 1e-12)
      --k;
    hull[k++] = points[i];
  }
  hull.resize(k - 1);  // last point repeats the first
  if (hull.size() == 1 && n > 1) return {points.front(), points.back()};
  return hull;
}

std::vector<HoughLine> hough_lines(const std::vector<Vec2>& cells,
                                   const HoughParams& params) {
  std::vector<HoughLine> lines;
  if (cells.size() < 2) return lines;

  double max_r = 0.0;
  for (const Vec2& c : cells) max_r = std::max(max_r, norm(c));
  const int theta_bins =
      std::max(1, static_cast<int>(std::lround(M_PI / params.theta_resolution)));
  const int rho_bins =
      2 * static_cast<int>(std::ceil(max_r / params.rho_resolution)) + 3;
  const double rho_offset = (rho_bins / 2) * params.rho_resolution;

  std::vector<double> cos_t(theta_bins), sin_t(theta_bins);
  for (int t = 0; t < theta_bins; ++t) {
    const double theta = (t + 0.5) * params.theta_resolution;
    cos_t[t] = std::cos(theta);
    sin_t[t] = std::sin(theta);
  }

  // Seeded sampling order.
  std::vector<int> order(cells.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  Rng rng(params.seed);
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.uniform_int(static_cast<int>(i))]);

  std::vector<int> acc(static_cast<std::size_t>(theta_bins) * rho_bins, 0);
  std::vector<char> removed(cells.size(), 0);

  auto rho_bin = [&](double rho) {
    return static_cast<int>(std::floor((rho + rho_offset) / params.rho_resolution));
  };

  for (int idx : order) {
    if (removed[idx]) continue;
    const Vec2 p = cells[idx];
    int best_votes = 0, best_t = -1, best_r = -1;
    for (int t = 0; t < theta_bins; ++t) {
      const int r = rho_bin(p.x * cos_t[t] + p.y * sin_t[t]);
      if (r < 0 || r >= rho_bins) continue;
      const int votes = ++acc[static_cast<std::size_t>(t) * rho_bins + r];
      if (votes > best_votes) {
        best_votes = votes;
        best_t = t;
        best_r = r;
      }
    }
    if (best_votes < params.vote_threshold) continue;

    // Collect surviving support near the accumulator line.
    const double theta0 = (best_t + 0.5) * params.theta_resolution;
    const double rho0 = (best_r + 0.5) * params.rho_resolution - rho_offset;
    const Vec2 n0{std::cos(theta0), std::sin(theta0)};
    std::vector<int> support;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (removed[i]) continue;
      if (std::abs(dot(n0, cells[i]) - rho0) <= params.rho_resolution)
        support.push_back(static_cast<int>(i));
    }
    if (static_cast<int>(support.size()) < params.vote_threshold) continue;

    // Total-least-squares refit over the support (principal direction).
    Vec2 mean;
    for (int i : support) mean += cells[i];
    mean = mean * (1.0 / support.size());
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (int i : support) {
      const Vec2 d = cells[i] - mean;
      sxx += d.x * d.x;
      sxy += d.x * d.y;
      syy += d.y * d.y;
    }
    const double half_trace = 0.5 * (sxx + syy);
    const double det = sxx * syy - sxy * sxy;
    const double l1 = half_trace + std::sqrt(std::max(half_trace * half_trace - det, 0.0));
    Vec2 dir =
        std::abs(sxy) > 1e-12 ? Vec2{l1 - syy, sxy} : (sxx >= syy ? Vec2{1, 0} : Vec2{0, 1});
    const double dn = norm(dir);
    dir = {dir.x / dn, dir.y / dn};

    HoughLine line;
    Vec2 normal{-dir.y, dir.x};
    double theta = std::atan2(normal.y, normal.x);
    double rho = dot(normal, mean);
    if (theta < 0.0) {
      theta += M_PI;
      rho = -rho;
      normal = {-normal.x, -normal.y};
    }
    if (theta >= M_PI) theta -= M_PI;
    line.theta = theta;
    line.rho = rho;
    line.support = static_cast<int>(support.size());

    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int i : support) {
      const double s = dot(dir, cells[i] - mean);
      lo = std::min(lo, s);
      hi = std::max(hi, s);
      removed[i] = 1;
      // Retract this point's accumulator votes.
      for (int t = 0; t < theta_bins; ++t) {
        const int r = rho_bin(cells[i].x * cos_t[t] + cells[i].y * sin_t[t]);
        if (r >= 0 && r < rho_bins) --acc[static_cast<std::size_t>(t) * rho_bins + r];
      }
    }
    line.p0 = mean + dir * lo;
    line.p1 = mean + dir * hi;
    lines.push_back(line);
  }
  return lines;
}

std::vector<CellIndex> line_intersections(const std::vector<HoughLine>& lines,
                                          double max_corner_distance,
                                          const std::vector<Vec2>& observed,
                                          const GridDims& dims) {
  std::vector<CellIndex> corners;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    for (std::size_t j = i + 1; j < lines.size(); ++j) {
      const double c1 = std::cos(lines[i].theta), s1 = std::sin(lines[i].theta);
      const double c2 = std::cos(lines[j].theta), s2 = std::sin(lines[j].theta);
      const double det = c1 * s2 - s1 * c2;
      if (std::abs(det) < 1e-3) continue;  // near-parallel
      const Vec2 p{(lines[i].rho * s2 - lines[j].rho * s1) / det,
                   (c1 * lines[j].rho - c2 * lines[i].rho) / det};
      const CellIndex cell = dims.cell_at(p);
      if (!dims.in_bounds(cell)) continue;
      double nearest = std::numeric_limits<double>::infinity();
      for (const Vec2& o : observed) nearest = std::min(nearest, distance(o, p));
      if (nearest > max_corner_distance) continue;
      if (std::find(corners.begin(), corners.end(), cell) == corners.end())
        corners.push_back(cell);
    }
  }
  std::sort(corners.begin(), corners.end());
  return corners;
}

std::set<CellIndex> inflate(const std::set<CellIndex>& source, int depth,
                            const GridDims& dims) {
  std::set<CellIndex> out;
  for (const CellIndex& c : source) {
    for (int dy = -depth; dy <= depth; ++dy) {
      for (int dx = -depth; dx <= depth; ++dx) {
        const CellIndex n{c.cx + dx, c.cy + dy};
        if (dims.in_bounds(n)) out.insert(n);
      }
    }
  }
  return out;
}

std::vector<Facet> linearize_hull(HullModel& model) {
  model.facets.clear();
  if (model.vertices.size() < 3) {
    model.linear = true;  // point or segment passes through unchanged
    return model.facets;
  }
  model.linear = false;
  const std::size_t n = model.vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = model.vertices[i];
    const Vec2& b = model.vertices[(i + 1) % n];
    const Vec2 edge = b - a;
    const double len = norm(edge);
    if (len < 1e-12) continue;
    // CCW polygon: interior lies left of the edge, outward normal right.
    Facet f;
    f.normal = {edge.y / len, -edge.x / len};
    f.offset = dot(f.normal, a);
    model.facets.push_back(f);
  }
  return model.facets;
}

namespace {

// Distance from point to segment [a, b].
double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = squared_norm(ab);
  if (len2 < 1e-18) return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + ab * t);
}

double hull_boundary_distance(const Vec2& p, const std::vector<Vec2>& hull) {
  if (hull.empty()) return std::numeric_limits<double>::infinity();
  if (hull.size() == 1) return distance(p, hull[0]);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < hull.size(); ++i)
    best = std::min(best, segment_distance(p, hull[i], hull[(i + 1) % hull.size()]));
  return best;
}

}  // namespace

HullModel predict_boundary(const CellSets& observed, const GridDims& dims,
                           const BoundaryParams& params,
                           std::optional<CellIndex> ego) {
  HullModel model;
  model.dims = dims;
  model.prediction.assign(dims.size(), PredState::Unknown);
  for (const CellIndex& c : observed.free_observed)
    model.prediction[dims.index(c)] = PredState::ObservedFree;
  for (const CellIndex& c : observed.occupied_observed)
    model.prediction[dims.index(c)] = PredState::ObservedWall;

  std::vector<Vec2> pts;
  pts.reserve(observed.free_observed.size() + observed.occupied_observed.size());
  for (const CellIndex& c : observed.free_observed) pts.push_back(dims.center(c));
  for (const CellIndex& c : observed.occupied_observed) pts.push_back(dims.center(c));
  if (pts.empty()) return model;

  const std::vector<Vec2> hull0 = convex_hull(pts);

  // Occupied cells on the first hull contour feed the line search.
  std::vector<Vec2> contour_occ;
  const double band = dims.resolution * 0.75;
  for (const CellIndex& c : observed.occupied_observed) {
    if (hull_boundary_distance(dims.center(c), hull0) <= band)
      contour_occ.push_back(dims.center(c));
  }
  model.wall_lines = hough_lines(contour_occ, params.hough);
  model.corners = line_intersections(model.wall_lines, params.max_corner_distance,
                                     pts, dims);

  std::vector<Vec2> pts2 = pts;
  for (const CellIndex& c : model.corners) pts2.push_back(dims.center(c));
  model.vertices = convex_hull(pts2);
  linearize_hull(model);

  // Prediction layer: hull-contour cells predicted occupied, interior unknown
  // cells predicted free. Direct observations are never overwritten.
  if (!model.linear && model.vertices.size() >= 3) {
    const double contour_band = dims.resolution * 0.6;
    for (int cy = 0; cy < dims.height; ++cy) {
      for (int cx = 0; cx < dims.width; ++cx) {
        const int id = dims.index({cx, cy});
        if (model.prediction[id] != PredState::Unknown) continue;
        const Vec2 p = dims.center({cx, cy});
        if (!model.inside(p, contour_band)) continue;
        if (hull_boundary_distance(p, model.vertices) <= contour_band)
          model.prediction[id] = PredState::PredictedWall;
        else if (model.inside(p))
          model.prediction[id] = PredState::PredictedFree;
      }
    }
  }

  std::set<CellIndex> to_inflate = observed.occupied_observed;
  for (const CellIndex& c : model.corners) to_inflate.insert(c);
  model.inflated = inflate(to_inflate, params.inflation_depth, dims);

  // Interior regions unreachable from the ego cell become inferred obstacles.
  if (ego && dims.in_bounds(*ego)) {
    std::vector<char> reach(dims.size(), 0);
    std::deque<CellIndex> queue;
    // Only observed walls block reachability: the predicted contour and the
    // inflation margin are estimates, and blocking on them would seal the
    // robot inside its own optimistic boundary.
    auto passable = [&](const CellIndex& c) {
      return model.prediction[dims.index(c)] != PredState::ObservedWall;
    };
    // Ego cell is always a valid seed even when sitting inside the inflation.
    reach[dims.index(*ego)] = 1;
    queue.push_back(*ego);
    while (!queue.empty()) {
      const CellIndex c = queue.front();
      queue.pop_front();
      // 4-connected: diagonal cracks between wall cells must not leak.
      const CellIndex neighbors[4] = {{c.cx + 1, c.cy},
                                      {c.cx - 1, c.cy},
                                      {c.cx, c.cy + 1},
                                      {c.cx, c.cy - 1}};
      for (const CellIndex& n : neighbors) {
        if (!dims.in_bounds(n) || reach[dims.index(n)]) continue;
        if (!passable(n)) continue;
        reach[dims.index(n)] = 1;
        queue.push_back(n);
      }
    }
    for (int id = 0; id < static_cast<int>(dims.size()); ++id) {
      const PredState s = model.prediction[id];
      // Strictly interior unreached cells are sealed pockets (e.g. the
      // unobservable cores of obstacles); fringe cells near the contour are
      // not, they are merely beyond the prediction.
      if ((s == PredState::PredictedFree || s == PredState::Unknown) && !reach[id] &&
          model.inside(dims.center(dims.cell(id)), -2.0 * dims.resolution)) {
        model.prediction[id] = PredState::InferredObstacle;
        model.inflated.insert(dims.cell(id));
      }
    }
  }
  return model;
}

std::optional<FrontierChoice> select_next_region(const HullModel& model,
                                                 const BeliefGrid& belief,
                                                 const std::vector<PeerState>& peers,
                                                 const Vec2& ego, double lambda) {
  if (model.facets.empty()) return std::nullopt;
  std::optional<FrontierChoice> best;
  const GridDims& dims = model.dims;
  // Rasterized-hull semantics: the contour band counts as inside, so the
  // unknown ring adjacent to observed space stays eligible (hull facets cut
  // polygon corners, which pushes diagonal ring cells ~1.4 cells out).
  // Rings outside real walls are removed by the inflation test below.
  const double band = dims.resolution * 1.6;
  for (int cy = 0; cy < dims.height; ++cy) {
    for (int cx = 0; cx < dims.width; ++cx) {
      const CellIndex c{cx, cy};
      const int id = dims.index(c);
      if (belief.explored[id]) continue;
      const Vec2 p = dims.center(c);
      if (!model.inside(p, band)) continue;
      if (model.inflated.count(c)) continue;
      // Predicted walls stay eligible: the optimistic boundary is exactly
      // where exploration pays off. Observed walls and sealed pockets do not.
      const PredState s = model.prediction[id];
      if (s == PredState::ObservedWall || s == PredState::InferredObstacle)
        continue;

      double peer_dist = std::numeric_limits<double>::infinity();
      for (const PeerState& peer : peers) {
        const Vec2 anchor = peer.goal ? dims.center(*peer.goal) : peer.position;
        peer_dist = std::min(peer_dist, distance(p, anchor));
      }
      double score = distance(p, ego);
      if (std::isfinite(peer_dist)) score -= lambda * peer_dist;
      // Strict less keeps the first (row, col) cell on ties.
      if (!best || score < best->score) best = FrontierChoice{c, score};
    }
  }
  return best;
}

}  // namespace seal
