#pragma once

#include <string>
#include <vector>

#include "seal/geometry.hpp"
#include "seal/gp.hpp"
#include "seal/world.hpp"

namespace seal {

// Structural similarity of the thresholded belief map against ground truth.
// 11x11 Gaussian window (sigma 1.5), C1 = (0.01 L)^2, C2 = (0.03 L)^2, L = 1,
// averaged over window centers fully inside the image. Belief cells binarize
// occupied at value > 0.5.
double ssim(const BeliefGrid& map, const WorldMap& truth);

// Same statistic over the raw belief values (secondary diagnostic).
double ssim_soft(const BeliefGrid& map, const WorldMap& truth);

// Core SSIM over two equally sized images with values in [0, 1].
double ssim_images(const std::vector<double>& a, const std::vector<double>& b,
                   int width, int height);

// Rigid 2-D alignment (rotation + translation, no scale) of `estimated` onto
// `truth`, minimizing squared error, then RMSE over positions.
double ate(const std::vector<Vec2>& estimated, const std::vector<Vec2>& truth);

// Frame-anchored mean Euclidean error per step (no alignment).
double ale(const std::vector<Vec2>& estimated, const std::vector<Vec2>& truth);

// Explored percentage normalized by the truth's free-space cell count.
double explored_pct(const BeliefGrid& belief, const WorldMap& truth);

struct RigidTransform {
  double c = 1.0, s = 0.0;  // rotation
  Vec2 t;                   // translation

  Vec2 apply(const Vec2& p) const {
    return {c * p.x - s * p.y + t.x, s * p.x + c * p.y + t.y};
  }
};

// Least-squares rotation+translation mapping src onto dst (Umeyama, no scale).
RigidTransform fit_rigid(const std::vector<Vec2>& src, const std::vector<Vec2>& dst);

struct PerRobotMetrics {
  int robot = 0;
  double distance_m = 0.0;
  double ate_m = 0.0;
  double ale_m = 0.0;
  double map_ssim = 0.0;
  double explored_pct = 0.0;
};

struct SeriesPoint {
  long step = 0;
  double explored_pct = 0.0;
  double ale_m = 0.0;
  double mean_entropy = 0.0;
  double mean_psi = 0.0;
};

struct RunReport {
  double mapping_time_s = 0.0;
  double total_distance_m = 0.0;
  double explored_pct = 0.0;
  double map_ssim = 0.0;
  double map_ssim_soft = 0.0;
  double ate_m = 0.0;
  double ale_m = 0.0;
  long steps = 0;
  bool completed = false;
  std::vector<PerRobotMetrics> per_robot;
  std::vector<SeriesPoint> series;

  // Deterministic serialization; equal reports produce identical bytes.
  std::string to_json() const;
};

}  // namespace seal
