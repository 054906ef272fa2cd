#include "seal/world.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "seal/errors.hpp"

namespace seal {

void WorldMap::validate() const {
  if (dims.resolution <= 0.0) throw SealError("world resolution must be > 0");
  if (dims.width < 3 || dims.height < 3) throw SealError("world too small");
  if (cells.size() != dims.size()) throw SealError("world cell count mismatch");
  for (int cx = 0; cx < dims.width; ++cx) {
    if (!occupied({cx, 0}) || !occupied({cx, dims.height - 1}))
      throw SealError("world boundary must be occupied");
  }
  for (int cy = 0; cy < dims.height; ++cy) {
    if (!occupied({0, cy}) || !occupied({dims.width - 1, cy}))
      throw SealError("world boundary must be occupied");
  }
  if (std::find(cells.begin(), cells.end(), CellState::Free) == cells.end())
    throw SealError("world has no free cell");
}

WorldMap make_empty_world(double width_m, double height_m, double resolution) {
  WorldMap w;
  w.dims.width = static_cast<int>(std::lround(width_m / resolution));
  w.dims.height = static_cast<int>(std::lround(height_m / resolution));
  w.dims.resolution = resolution;
  w.cells.assign(w.dims.size(), CellState::Free);
  for (int cx = 0; cx < w.dims.width; ++cx) {
    w.set({cx, 0}, CellState::Occupied);
    w.set({cx, w.dims.height - 1}, CellState::Occupied);
  }
  for (int cy = 0; cy < w.dims.height; ++cy) {
    w.set({0, cy}, CellState::Occupied);
    w.set({w.dims.width - 1, cy}, CellState::Occupied);
  }
  return w;
}

namespace {

void fill_rect(WorldMap& w, double x0, double y0, double x1, double y1,
               CellState s) {
  const double res = w.dims.resolution;
  int cx0 = std::max(0, static_cast<int>(std::floor(x0 / res)));
  int cy0 = std::max(0, static_cast<int>(std::floor(y0 / res)));
  int cx1 = std::min(w.dims.width - 1, static_cast<int>(std::ceil(x1 / res)) - 1);
  int cy1 = std::min(w.dims.height - 1, static_cast<int>(std::ceil(y1 / res)) - 1);
  for (int cy = cy0; cy <= cy1; ++cy)
    for (int cx = cx0; cx <= cx1; ++cx) w.set({cx, cy}, s);
}

}  // namespace

WorldMap make_bookstore(double resolution) {
  WorldMap w = make_empty_world(20.0, 20.0, resolution);
  // Three rows of three shelf blocks; aisles stay wider than 1.5 m.
  const double shelf_len = 3.2;
  const double shelf_depth = 0.6;
  for (double y0 : {5.0, 9.5, 14.0}) {
    for (double x0 : {2.5, 8.4, 14.3}) {
      fill_rect(w, x0, y0, x0 + shelf_len, y0 + shelf_depth, CellState::Occupied);
    }
  }
  // Checkout counter near the entry wall.
  fill_rect(w, 12.0, 1.6, 16.0, 2.2, CellState::Occupied);
  w.validate();
  return w;
}

WorldMap make_house(double resolution) {
  WorldMap w = make_empty_world(20.0, 20.0, resolution);
  const double t = 2.0 * resolution;  // interior wall thickness
  // Vertical spine wall with two doorways.
  fill_rect(w, 10.0, 0.0, 10.0 + t, 3.8, CellState::Occupied);
  fill_rect(w, 10.0, 5.6, 10.0 + t, 13.8, CellState::Occupied);
  fill_rect(w, 10.0, 15.6, 10.0 + t, 20.0, CellState::Occupied);
  // Horizontal wall with two doorways.
  fill_rect(w, 0.0, 10.0, 3.8, 10.0 + t, CellState::Occupied);
  fill_rect(w, 5.6, 10.0, 14.8, 10.0 + t, CellState::Occupied);
  fill_rect(w, 16.6, 10.0, 20.0, 10.0 + t, CellState::Occupied);
  // A short partition in the upper-left room.
  fill_rect(w, 4.0, 14.0, 4.0 + t, 20.0, CellState::Occupied);
  w.validate();
  return w;
}

WorldMap parse_world_ascii(const std::string& text, double resolution) {
  std::vector<std::string> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    if (!line.empty()) rows.push_back(line);
  }
  if (rows.empty()) throw SealError("empty ascii world");
  const std::size_t width = rows.front().size();
  WorldMap w;
  w.dims.width = static_cast<int>(width);
  w.dims.height = static_cast<int>(rows.size());
  w.dims.resolution = resolution;
  w.cells.assign(w.dims.size(), CellState::Free);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != width)
      throw SealError("ascii world row " + std::to_string(r) + " has ragged width");
    const int cy = w.dims.height - 1 - static_cast<int>(r);  // first row = top
    for (std::size_t c = 0; c < width; ++c) {
      char ch = rows[r][c];
      if (ch == '#')
        w.set({static_cast<int>(c), cy}, CellState::Occupied);
      else if (ch != '.')
        throw SealError(std::string("ascii world: unexpected character '") + ch + "'");
    }
  }
  // Closed world: force the boundary ring occupied.
  for (int cx = 0; cx < w.dims.width; ++cx) {
    w.set({cx, 0}, CellState::Occupied);
    w.set({cx, w.dims.height - 1}, CellState::Occupied);
  }
  for (int cy = 0; cy < w.dims.height; ++cy) {
    w.set({0, cy}, CellState::Occupied);
    w.set({w.dims.width - 1, cy}, CellState::Occupied);
  }
  w.validate();
  return w;
}

namespace {

int next_pgm_token(std::istream& in) {
  // Skips whitespace and '#' comment lines.
  while (true) {
    int c = in.peek();
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int value = -1;
  in >> value;
  if (!in) throw SealError("malformed PGM header");
  return value;
}

}  // namespace

WorldMap load_world_pgm(const std::string& path, double resolution) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SealError("cannot open world file: " + path);
  std::string magic;
  in >> magic;
  if (magic != "P2" && magic != "P5") throw SealError("not a P2/P5 PGM: " + path);
  const int width = next_pgm_token(in);
  const int height = next_pgm_token(in);
  const int maxval = next_pgm_token(in);
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 255)
    throw SealError("bad PGM dimensions in " + path);

  std::vector<int> raw(static_cast<std::size_t>(width) * height);
  if (magic == "P2") {
    for (auto& v : raw) {
      in >> v;
      if (!in) throw SealError("truncated P2 data in " + path);
    }
  } else {
    in.get();  // single whitespace after maxval
    for (auto& v : raw) {
      int c = in.get();
      if (c == EOF) throw SealError("truncated P5 data in " + path);
      v = c;
    }
  }

  WorldMap w;
  w.dims.width = width;
  w.dims.height = height;
  w.dims.resolution = resolution;
  w.cells.assign(w.dims.size(), CellState::Free);
  for (int r = 0; r < height; ++r) {
    const int cy = height - 1 - r;  // PGM row 0 = top of the map
    for (int cx = 0; cx < width; ++cx) {
      if (raw[static_cast<std::size_t>(r) * width + cx] < 128)
        w.set({cx, cy}, CellState::Occupied);
    }
  }
  for (int cx = 0; cx < w.dims.width; ++cx) {
    w.set({cx, 0}, CellState::Occupied);
    w.set({cx, w.dims.height - 1}, CellState::Occupied);
  }
  for (int cy = 0; cy < w.dims.height; ++cy) {
    w.set({0, cy}, CellState::Occupied);
    w.set({w.dims.width - 1, cy}, CellState::Occupied);
  }
  w.validate();
  return w;
}

WorldMap load_world(const std::string& spec, double resolution) {
  if (spec == "builtin:bookstore") return make_bookstore(resolution);
  if (spec == "builtin:house") return make_house(resolution);
  if (spec == "builtin:empty") return make_empty_world(12.0, 12.0, resolution);
  if (spec == "builtin:empty20") return make_empty_world(20.0, 20.0, resolution);
  if (spec.size() > 4 && spec.substr(spec.size() - 4) == ".pgm")
    return load_world_pgm(spec, resolution);
  std::ifstream in(spec);
  if (!in) throw SealError("cannot open world file: " + spec);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_world_ascii(buf.str(), resolution);
}

void write_world_pgm(const WorldMap& world, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SealError("cannot write " + path);
  out << "P5\n" << world.dims.width << " " << world.dims.height << "\n255\n";
  for (int r = 0; r < world.dims.height; ++r) {
    const int cy = world.dims.height - 1 - r;
    for (int cx = 0; cx < world.dims.width; ++cx) {
      out.put(world.occupied({cx, cy}) ? '\0' : static_cast<char>(255));
    }
  }
}

Pose2D step_kinematics(const Pose2D& pose, const VelocityCommand& cmd, double dt,
                       const MotionLimits& limits) {
  const double v = std::clamp(cmd.v, -limits.v_max, limits.v_max);
  const double w = std::clamp(cmd.w, -limits.w_max, limits.w_max);
  Pose2D out = pose;
  if (std::abs(w) < 1e-9) {
    out.x += v * std::cos(pose.theta) * dt;
    out.y += v * std::sin(pose.theta) * dt;
    out.theta = normalize_angle(pose.theta + w * dt);
  } else {
    const double r = v / w;
    out.x += r * (std::sin(pose.theta + w * dt) - std::sin(pose.theta));
    out.y -= r * (std::cos(pose.theta + w * dt) - std::cos(pose.theta));
    out.theta = normalize_angle(pose.theta + w * dt);
  }
  return out;
}

StepResult step_kinematics(const WorldMap& world, const Pose2D& pose,
                           const VelocityCommand& cmd, double dt,
                           const MotionLimits& limits) {
  const double v = std::clamp(cmd.v, -limits.v_max, limits.v_max);
  const double path_len = std::abs(v) * dt;
  const double max_sub = world.dims.resolution * 0.5;
  const int substeps = std::max(1, static_cast<int>(std::ceil(path_len / max_sub)));

  StepResult result{pose, false, 0.0};
  Pose2D last_free = pose;
  for (int s = 1; s <= substeps; ++s) {
    const double tau = dt * static_cast<double>(s) / substeps;
    Pose2D candidate = step_kinematics(pose, cmd, tau, limits);
    if (world.occupied_at(candidate.position())) {
      result.pose = last_free;
      result.blocked = true;
      result.distance = std::abs(v) * dt * static_cast<double>(s - 1) / substeps;
      return result;
    }
    last_free = candidate;
  }
  result.pose = last_free;
  result.distance = path_len;
  return result;
}

LidarScan cast_lidar(const WorldMap& world, const Pose2D& pose,
                     const SensorSpec& spec, Rng& rng) {
  if (world.occupied_at(pose.position()))
    throw PoseInsideObstacleError("lidar origin inside obstacle");

  LidarScan scan;
  scan.origin = pose;
  scan.ranges.assign(spec.beam_count, spec.range_max);
  scan.hit.assign(spec.beam_count, false);

  const double step = world.dims.resolution * 0.5;
  const Vec2 origin = pose.position();
  for (int k = 0; k < spec.beam_count; ++k) {
    const double rel = spec.beam_count == 1
                           ? 0.0
                           : -spec.fov / 2.0 + spec.fov * k / (spec.beam_count - 1);
    const double ang = pose.theta + rel;
    const Vec2 dir{std::cos(ang), std::sin(ang)};
    double t = step;
    while (t <= spec.range_max) {
      if (world.occupied_at({origin.x + dir.x * t, origin.y + dir.y * t})) {
        // Back off half a march step: the true surface lies in (t-step, t].
        double r = std::max(step * 0.5, t - step * 0.5);
        r += rng.gaussian(spec.range_noise_sigma);
        scan.ranges[k] = std::clamp(r, 1e-9, spec.range_max);
        scan.hit[k] = true;
        break;
      }
      t += step;
    }
  }
  return scan;
}

double mean_rssi(const RssiChannel& channel, double d) {
  const double eff = std::max(d, channel.d0);
  return channel.p0_dbm -
         10.0 * channel.path_loss_exponent * std::log10(eff / channel.d0);
}

double sample_rssi(const RssiChannel& channel, const Vec2& tx, const Vec2& rx,
                   Rng& rng) {
  return mean_rssi(channel, distance(tx, rx)) +
         rng.gaussian(channel.shadowing_sigma_db);
}

}  // namespace seal
