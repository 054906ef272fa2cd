#include "seal/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "seal/errors.hpp"

namespace seal {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;  // (0.01 * L)^2, L = 1
constexpr double kC2 = 0.03 * 0.03;

std::vector<double> gaussian_kernel_1d() {
  std::vector<double> k(kWindow);
  double sum = 0.0;
  const int half = kWindow / 2;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - half;
    k[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable Gaussian filter; output valid only where the window fits.
std::vector<double> filter2(const std::vector<double>& img, int w, int h) {
  const std::vector<double> k = gaussian_kernel_1d();
  const int half = kWindow / 2;
  std::vector<double> tmp(img.size(), 0.0), out(img.size(), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = half; x < w - half; ++x) {
      double s = 0.0;
      for (int i = 0; i < kWindow; ++i) s += k[i] * img[y * w + x - half + i];
      tmp[y * w + x] = s;
    }
  }
  for (int y = half; y < h - half; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int i = 0; i < kWindow; ++i) s += k[i] * tmp[(y - half + i) * w + x];
      out[y * w + x] = s;
    }
  }
  return out;
}

}  // namespace

double ssim_images(const std::vector<double>& a, const std::vector<double>& b,
                   int width, int height) {
  if (a.size() != b.size() ||
      a.size() != static_cast<std::size_t>(width) * height)
    throw GeometryMismatchError("ssim image size mismatch");
  if (width < kWindow || height < kWindow)
    throw GeometryMismatchError("ssim needs at least an 11x11 image");

  std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const std::vector<double> mu_a = filter2(a, width, height);
  const std::vector<double> mu_b = filter2(b, width, height);
  const std::vector<double> m_aa = filter2(aa, width, height);
  const std::vector<double> m_bb = filter2(bb, width, height);
  const std::vector<double> m_ab = filter2(ab, width, height);

  const int half = kWindow / 2;
  double total = 0.0;
  long count = 0;
  for (int y = half; y < height - half; ++y) {
    for (int x = half; x < width - half; ++x) {
      const int i = y * width + x;
      const double va = m_aa[i] - mu_a[i] * mu_a[i];
      const double vb = m_bb[i] - mu_b[i] * mu_b[i];
      const double cov = m_ab[i] - mu_a[i] * mu_b[i];
      const double num = (2.0 * mu_a[i] * mu_b[i] + kC1) * (2.0 * cov + kC2);
      const double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + kC1) * (va + vb + kC2);
      total += num / den;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

namespace {

std::vector<double> binarize_belief(const BeliefGrid& map) {
  std::vector<double> img(map.dims.size());
  for (std::size_t i = 0; i < img.size(); ++i)
    img[i] = map.value[i] > 0.5 ? 1.0 : 0.0;
  return img;
}

std::vector<double> truth_image(const WorldMap& truth) {
  std::vector<double> img(truth.dims.size());
  for (std::size_t i = 0; i < img.size(); ++i)
    img[i] = truth.cells[i] == CellState::Occupied ? 1.0 : 0.0;
  return img;
}

}  // namespace

double ssim(const BeliefGrid& map, const WorldMap& truth) {
  if (!map.dims.same_geometry(truth.dims))
    throw GeometryMismatchError("ssim: belief and truth geometry differ");
  return ssim_images(binarize_belief(map), truth_image(truth), map.dims.width,
                     map.dims.height);
}

double ssim_soft(const BeliefGrid& map, const WorldMap& truth) {
  if (!map.dims.same_geometry(truth.dims))
    throw GeometryMismatchError("ssim: belief and truth geometry differ");
  return ssim_images(map.value, truth_image(truth), map.dims.width,
                     map.dims.height);
}

RigidTransform fit_rigid(const std::vector<Vec2>& src, const std::vector<Vec2>& dst) {
  if (src.size() != dst.size() || src.empty())
    throw LengthMismatchError("fit_rigid: trajectory lengths differ");

  Vec2 mean_s, mean_d;
  for (std::size_t i = 0; i < src.size(); ++i) {
    mean_s += src[i];
    mean_d += dst[i];
  }
  const double inv_n = 1.0 / static_cast<double>(src.size());
  mean_s = mean_s * inv_n;
  mean_d = mean_d * inv_n;

  // 2-D cross-covariance; optimal rotation angle from its components.
  double sxx = 0.0, sxy = 0.0, syx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Vec2 s = src[i] - mean_s;
    const Vec2 d = dst[i] - mean_d;
    sxx += s.x * d.x;
    sxy += s.x * d.y;
    syx += s.y * d.x;
    syy += s.y * d.y;
  }
  RigidTransform t;
  const double angle = std::atan2(sxy - syx, sxx + syy);
  t.c = std::cos(angle);
  t.s = std::sin(angle);
  t.t = {mean_d.x - (t.c * mean_s.x - t.s * mean_s.y),
         mean_d.y - (t.s * mean_s.x + t.c * mean_s.y)};
  return t;
}

double ate(const std::vector<Vec2>& estimated, const std::vector<Vec2>& truth) {
  if (estimated.size() != truth.size())
    throw LengthMismatchError("ate: trajectory lengths differ");
  if (estimated.empty()) return 0.0;
  const RigidTransform t = fit_rigid(estimated, truth);
  double sq = 0.0;
  for (std::size_t i = 0; i < estimated.size(); ++i)
    sq += squared_norm(t.apply(estimated[i]) - truth[i]);
  return std::sqrt(sq / static_cast<double>(estimated.size()));
}

double ale(const std::vector<Vec2>& estimated, const std::vector<Vec2>& truth) {
  if (estimated.size() != truth.size())
    throw LengthMismatchError("ale: trajectory lengths differ");
  if (estimated.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < estimated.size(); ++i)
    total += distance(estimated[i], truth[i]);
  return total / static_cast<double>(estimated.size());
}

double explored_pct(const BeliefGrid& belief, const WorldMap& truth) {
  if (!belief.dims.same_geometry(truth.dims))
    throw GeometryMismatchError("explored_pct: geometry differs");
  long free_cells = 0, hit = 0;
  for (std::size_t i = 0; i < truth.cells.size(); ++i) {
    if (truth.cells[i] != CellState::Free) continue;
    ++free_cells;
    if (belief.explored[i]) ++hit;
  }
  if (free_cells == 0) return 0.0;
  return 100.0 * static_cast<double>(hit) / static_cast<double>(free_cells);
}

std::string RunReport::to_json() const {
  nlohmann::ordered_json j;
  j["mapping_time_s"] = mapping_time_s;
  j["total_distance_m"] = total_distance_m;
  j["explored_pct"] = explored_pct;
  j["map_ssim"] = map_ssim;
  j["map_ssim_soft"] = map_ssim_soft;
  j["ate_m"] = ate_m;
  j["ale_m"] = ale_m;
  j["steps"] = steps;
  j["completed"] = completed;
  j["per_robot"] = nlohmann::ordered_json::array();
  for (const PerRobotMetrics& r : per_robot) {
    nlohmann::ordered_json jr;
    jr["robot"] = r.robot;
    jr["distance_m"] = r.distance_m;
    jr["ate_m"] = r.ate_m;
    jr["ale_m"] = r.ale_m;
    jr["map_ssim"] = r.map_ssim;
    jr["explored_pct"] = r.explored_pct;
    j["per_robot"].push_back(jr);
  }
  j["series"] = {{"csv", "series.csv"}};
  return j.dump(2) + "\n";
}

}  // namespace seal
