#pragma once

#include <cmath>
#include <cstddef>
#include <tuple>
#include <vector>

namespace seal {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }
};

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }

// z-component of the 3-D cross product; positive when b is left of a.
inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }

inline double squared_norm(const Vec2& a) { return a.x * a.x + a.y * a.y; }
inline double norm(const Vec2& a) { return std::sqrt(squared_norm(a)); }
inline double distance(const Vec2& a, const Vec2& b) { return norm(a - b); }

// Maps any angle into (-pi, pi].
inline double normalize_angle(double a) {
  double t = std::fmod(a + M_PI, 2.0 * M_PI);
  if (t <= 0.0) t += 2.0 * M_PI;
  return t - M_PI;
}

struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // radians in (-pi, pi]

  Pose2D() = default;
  Pose2D(double x_, double y_, double theta_) : x(x_), y(y_), theta(theta_) {}

  Vec2 position() const { return {x, y}; }
};

struct CellIndex {
  int cx = 0;  // column, along +x
  int cy = 0;  // row, along +y

  CellIndex() = default;
  CellIndex(int cx_, int cy_) : cx(cx_), cy(cy_) {}

  bool operator==(const CellIndex& o) const { return cx == o.cx && cy == o.cy; }
  bool operator!=(const CellIndex& o) const { return !(*this == o); }
  // (row, col) ordering; used wherever a deterministic cell order is required.
  bool operator<(const CellIndex& o) const {
    return std::tie(cy, cx) < std::tie(o.cy, o.cx);
  }
};

struct GridDims {
  int width = 0;
  int height = 0;
  double resolution = 1.0;  // meters per cell

  std::size_t size() const { return static_cast<std::size_t>(width) * height; }
  bool in_bounds(const CellIndex& c) const {
    return c.cx >= 0 && c.cy >= 0 && c.cx < width && c.cy < height;
  }
  int index(const CellIndex& c) const { return c.cy * width + c.cx; }
  CellIndex cell(int flat) const { return {flat % width, flat / width}; }
  CellIndex cell_at(const Vec2& p) const {
    return {static_cast<int>(std::floor(p.x / resolution)),
            static_cast<int>(std::floor(p.y / resolution))};
  }
  Vec2 center(const CellIndex& c) const {
    return {(c.cx + 0.5) * resolution, (c.cy + 0.5) * resolution};
  }
  double width_m() const { return width * resolution; }
  double height_m() const { return height * resolution; }
  bool same_geometry(const GridDims& o) const {
    return width == o.width && height == o.height &&
           std::abs(resolution - o.resolution) < 1e-12;
  }
};

}  // namespace seal
