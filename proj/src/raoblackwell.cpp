#include "seal/raoblackwell.hpp"

#include <algorithm>
#include <cmath>
#include <algorithm>

#include "seal/errors.hpp"

namespace seal {

PoseBelief PoseBelief::uniform_at(const Vec2& p, int n) {
  PoseBelief b;
  b.hypotheses.assign(static_cast<std::size_t>(n), {p, 1.0 / n});
  return b;
}

void PoseBelief::normalize() {
  double total = 0.0;
  for (const auto& h : hypotheses) total += h.weight;
  if (total <= 0.0) {
    const double u = 1.0 / static_cast<double>(hypotheses.size());
    for (auto& h : hypotheses) h.weight = u;
    degenerate = true;
    return;
  }
  for (auto& h : hypotheses) h.weight /= total;
}

Vec2 PoseBelief::mean() const {
  Vec2 m;
  for (const auto& h : hypotheses) m += h.position * h.weight;
  return m;
}

int PoseBelief::map_index() const {
  int best = 0;
  for (std::size_t i = 1; i < hypotheses.size(); ++i)
    if (hypotheses[i].weight > hypotheses[best].weight) best = static_cast<int>(i);
  return best;
}

namespace {

double gaussian_pdf(double x, double sigma) {
  const double z = x / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * M_PI));
}

// Center-anchored bilinear interpolation of the belief at a world point;
// sub-cell pose differences stay visible to the likelihood. At a cell
// center this returns the cell value exactly.
double bilerp_value(const BeliefGrid& map, const Vec2& p) {
  const double gx = p.x / map.dims.resolution - 0.5;
  const double gy = p.y / map.dims.resolution - 0.5;
  int ix = static_cast<int>(std::floor(gx));
  int iy = static_cast<int>(std::floor(gy));
  const double fx = gx - ix;
  const double fy = gy - iy;
  auto at = [&](int cx, int cy) {
    cx = std::clamp(cx, 0, map.dims.width - 1);
    cy = std::clamp(cy, 0, map.dims.height - 1);
    return map.value[map.dims.index({cx, cy})];
  };
  return (1.0 - fx) * (1.0 - fy) * at(ix, iy) + fx * (1.0 - fy) * at(ix + 1, iy) +
         (1.0 - fx) * fy * at(ix, iy + 1) + fx * fy * at(ix + 1, iy + 1);
}

}  // namespace

namespace {

// Deterministic quadrature subset: every occupied-evidence cell, free cells
// strided to fit the budget.
std::vector<const EvidenceCell*> likelihood_cells(const ObservationSet& obs,
                                                  std::size_t max_cells) {
  std::vector<const EvidenceCell*> picked;
  if (obs.cells.size() <= max_cells) {
    picked.reserve(obs.cells.size());
    for (const EvidenceCell& ev : obs.cells) picked.push_back(&ev);
    return picked;
  }
  std::size_t occupied = 0;
  for (const EvidenceCell& ev : obs.cells)
    if (ev.value >= 0.5) ++occupied;
  const std::size_t free_budget = max_cells > occupied ? max_cells - occupied : 0;
  std::size_t free_total = obs.cells.size() - occupied;
  const std::size_t stride =
      free_budget > 0 ? std::max<std::size_t>(1, free_total / free_budget) : 0;
  std::size_t free_seen = 0;
  for (const EvidenceCell& ev : obs.cells) {
    if (ev.value >= 0.5) {
      picked.push_back(&ev);
    } else if (stride > 0 && (free_seen++ % stride) == 0) {
      picked.push_back(&ev);
    }
  }
  return picked;
}

// Raw integrand masses; `degenerate` reports an all-zero (or non-finite) row.
std::vector<double> raw_masses(const PoseBelief& belief, const BeliefGrid& map,
                               const ObservationSet& obs,
                               const RaoBlackwellParams& params,
                               bool& degenerate) {
  const std::size_t n = belief.hypotheses.size();
  const std::vector<const EvidenceCell*> cells =
      likelihood_cells(obs, params.likelihood_max_cells);
  std::vector<double> mass(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const Vec2 base = belief.hypotheses[j].position;
    double m = 0.0;
    for (const EvidenceCell* ev : cells) {
      const Vec2 p = base + ev->offset;
      if (!map.dims.in_bounds(map.dims.cell_at(p))) continue;
      const double b = bilerp_value(map, p);
      m += gaussian_pdf(ev->value - b, params.likelihood_sigma) * b;
    }
    if (cells.empty()) m = 1.0;  // no spatial evidence: uninformative
    if (obs.has_rssi && j < obs.rssi_predicted.size()) {
      m *= gaussian_pdf(obs.rssi_observed - obs.rssi_predicted[j],
                        std::max(obs.rssi_sigma, 1e-6));
    }
    mass[j] = m;
  }
  double total = 0.0;
  for (double m : mass) total += m;
  degenerate = total <= 0.0 || !std::isfinite(total);
  return mass;
}

}  // namespace

std::vector<double> sample_weights(const PoseBelief& belief, const BeliefGrid& map,
                                   const ObservationSet& obs,
                                   const RaoBlackwellParams& params) {
  bool degenerate = false;
  std::vector<double> mass = raw_masses(belief, map, obs, params, degenerate);
  if (degenerate)
    std::fill(mass.begin(), mass.end(), 1.0 / static_cast<double>(mass.size()));
  return mass;
}

PoseBelief update_pose_belief(const PoseBelief& prior, const BeliefGrid& map,
                              const ObservationSet& obs,
                              const RaoBlackwellParams& params) {
  if (prior.hypotheses.empty()) throw SealError("pose belief has no hypotheses");
  bool degenerate = false;
  const std::vector<double> mass = raw_masses(prior, map, obs, params, degenerate);

  PoseBelief post = prior;
  post.degenerate = false;
  double total = 0.0;
  for (std::size_t j = 0; j < mass.size(); ++j) {
    post.hypotheses[j].weight = prior.hypotheses[j].weight * mass[j];
    total += post.hypotheses[j].weight;
  }
  post.psi = total;
  if (degenerate || total <= 0.0 || !std::isfinite(total)) {
    const double u = 1.0 / static_cast<double>(mass.size());
    for (auto& h : post.hypotheses) h.weight = u;
    post.degenerate = true;
    return post;
  }
  for (auto& h : post.hypotheses) h.weight /= total;
  return post;
}

double pose_entropy(const PoseBelief& belief) {
  double h = 0.0;
  for (const auto& hyp : belief.hypotheses) {
    if (hyp.weight > 0.0) h -= hyp.weight * std::log(hyp.weight);
  }
  return std::max(h, 0.0);
}

BeliefGrid update_map_belief(const BeliefGrid& map, const PoseBelief& belief,
                             const ObservationSet& obs,
                             const RaoBlackwellParams& params) {
  BeliefGrid out = map;
  if (obs.cells.empty()) return out;

  const double n_s = static_cast<double>(belief.hypotheses.size());
  const double h = pose_entropy(belief);
  const double h_max = std::log(n_s);
  const double attenuation = h_max > 0.0 ? std::exp(-h / h_max) : 1.0;
  const double rate = attenuation * params.map_rate;

  // Hypothesis-weighted evidence averaging, accumulated against the prior map
  // so the result does not depend on hypothesis order.
  std::vector<double> delta(map.dims.size(), 0.0);
  for (const auto& hyp : belief.hypotheses) {
    if (hyp.weight <= 0.0) continue;
    for (const EvidenceCell& ev : obs.cells) {
      const CellIndex c = map.dims.cell_at(hyp.position + ev.offset);
      if (!map.dims.in_bounds(c)) continue;
      const int id = map.dims.index(c);
      delta[id] += hyp.weight * ev.weight * (ev.value - map.value[id]);
    }
  }
  for (std::size_t id = 0; id < delta.size(); ++id) {
    if (delta[id] == 0.0) continue;
    out.value[id] = std::clamp(map.value[id] + rate * delta[id], 0.0, 1.0);
  }
  return out;
}

JointBelief joint_update(const JointBelief& joint, const ObservationSet& obs,
                         const RaoBlackwellParams& params) {
  JointBelief out;
  out.pose = update_pose_belief(joint.pose, joint.map, obs, params);
  out.map = update_map_belief(joint.map, out.pose, obs, params);
  return out;
}

}  // namespace seal
