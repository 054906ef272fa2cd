#include "seal/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "seal/errors.hpp"

namespace seal {

void write_pgm_gray(const std::string& path, const GridDims& dims,
                    const std::vector<std::uint8_t>& gray) {
  if (gray.size() != dims.size()) throw SealError("pgm payload size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SealError("cannot write " + path);
  out << "P5\n" << dims.width << " " << dims.height << "\n255\n";
  for (int r = 0; r < dims.height; ++r) {
    const int cy = dims.height - 1 - r;
    out.write(reinterpret_cast<const char*>(&gray[static_cast<std::size_t>(cy) *
                                                  dims.width]),
              dims.width);
  }
}

void write_belief_pgm(const BeliefGrid& belief, const std::string& path) {
  std::vector<std::uint8_t> gray(belief.dims.size());
  for (std::size_t i = 0; i < gray.size(); ++i)
    gray[i] = static_cast<std::uint8_t>(
        std::lround(255.0 * std::clamp(belief.confidence[i], 0.0, 1.0)));
  write_pgm_gray(path, belief.dims, gray);
}

void write_map_pgm(const BeliefGrid& belief, const HullModel* hull,
                   const std::string& path) {
  std::vector<std::uint8_t> gray(belief.dims.size(), 128);
  for (std::size_t i = 0; i < gray.size(); ++i) {
    if (belief.explored[i]) {
      gray[i] = belief.value[i] >= 0.5 ? 0 : 255;
    } else if (hull != nullptr && i < hull->prediction.size()) {
      switch (hull->prediction[i]) {
        case PredState::PredictedFree:
          gray[i] = 200;
          break;
        case PredState::PredictedWall:
        case PredState::InferredObstacle:
          gray[i] = 64;
          break;
        case PredState::ObservedFree:
          gray[i] = 255;
          break;
        case PredState::ObservedWall:
          gray[i] = 0;
          break;
        default:
          break;
      }
    }
  }
  write_pgm_gray(path, belief.dims, gray);
}

void write_belief_csv(const BeliefGrid& belief, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SealError("cannot write " + path);
  out << "cx,cy,value,confidence,explored\n";
  out.precision(9);
  for (int cy = 0; cy < belief.dims.height; ++cy) {
    for (int cx = 0; cx < belief.dims.width; ++cx) {
      const int id = belief.dims.index({cx, cy});
      out << cx << "," << cy << "," << belief.value[id] << ","
          << belief.confidence[id] << "," << int(belief.explored[id]) << "\n";
    }
  }
}

std::string hull_to_geojson(const HullModel& model) {
  std::ostringstream out;
  out.precision(9);
  out << "{\"type\":\"Feature\",\"geometry\":{\"type\":\"Polygon\",\"coordinates\":[[";
  const std::size_t n = model.vertices.size();
  for (std::size_t i = 0; n > 0 && i <= n; ++i) {
    const Vec2& v = model.vertices[i % n];
    if (i) out << ",";
    out << "[" << v.x << "," << v.y << "]";
  }
  out << "]]},\"properties\":{\"wall_lines\":" << model.wall_lines.size()
      << ",\"corners\":" << model.corners.size() << "}}";
  return out.str();
}

}  // namespace seal
