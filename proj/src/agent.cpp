#include "seal/agent.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <queue>
#include <sstream>

#include "seal/errors.hpp"
#include "seal/rng.hpp"

namespace seal {

namespace {

// Odometry integration must not clamp: the measurement already reflects the
// executed (clamped) velocities plus sensor noise.
Pose2D integrate_unicycle(const Pose2D& pose, double v, double w, double dt) {
  Pose2D out = pose;
  if (std::abs(w) < 1e-9) {
    out.x += v * std::cos(pose.theta) * dt;
    out.y += v * std::sin(pose.theta) * dt;
  } else {
    const double r = v / w;
    out.x += r * (std::sin(pose.theta + w * dt) - std::sin(pose.theta));
    out.y -= r * (std::cos(pose.theta + w * dt) - std::cos(pose.theta));
  }
  out.theta = normalize_angle(pose.theta + w * dt);
  return out;
}

constexpr std::uint64_t kTagProcess = 0x91;
constexpr std::uint64_t kTagResample = 0x92;
constexpr std::uint64_t kTagHough = 0x93;

struct AStarNode {
  double f;
  double h;
  int id;
  bool operator>(const AStarNode& o) const {
    return std::tie(f, h, id) > std::tie(o.f, o.h, o.id);
  }
};

std::vector<CellIndex> astar_grid(const GridDims& dims, const CellIndex& start,
                                  const CellIndex& goal,
                                  const std::function<bool(const CellIndex&)>& passable,
                                  const std::function<double(const CellIndex&)>& cell_cost) {
  if (!dims.in_bounds(start) || !dims.in_bounds(goal)) return {};
  const int n = static_cast<int>(dims.size());
  std::vector<double> g(n, std::numeric_limits<double>::infinity());
  std::vector<int> parent(n, -1);
  std::vector<char> closed(n, 0);
  std::priority_queue<AStarNode, std::vector<AStarNode>, std::greater<AStarNode>> open;

  auto heuristic = [&](const CellIndex& c) {
    const double dx = std::abs(c.cx - goal.cx);
    const double dy = std::abs(c.cy - goal.cy);
    return std::max(dx, dy) + 0.41421356237309515 * std::min(dx, dy);
  };

  const int s = dims.index(start);
  g[s] = 0.0;
  open.push({heuristic(start), heuristic(start), s});
  const int target = dims.index(goal);

  while (!open.empty()) {
    const AStarNode node = open.top();
    open.pop();
    if (closed[node.id]) continue;
    closed[node.id] = 1;
    if (node.id == target) break;
    const CellIndex c = dims.cell(node.id);
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const CellIndex nb{c.cx + dx, c.cy + dy};
        if (!dims.in_bounds(nb) || !passable(nb)) continue;
        if (dx != 0 && dy != 0) {
          // no corner cutting
          if (!passable({c.cx + dx, c.cy}) || !passable({c.cx, c.cy + dy})) continue;
        }
        const int ni = dims.index(nb);
        if (closed[ni]) continue;
        const double step_len = (dx != 0 && dy != 0) ? 1.4142135623730951 : 1.0;
        const double ng = g[node.id] + step_len * cell_cost(nb);
        if (ng < g[ni] - 1e-12) {
          g[ni] = ng;
          parent[ni] = node.id;
          open.push({ng + heuristic(nb), heuristic(nb), ni});
        }
      }
    }
  }
  if (!closed[target]) return {};
  std::vector<CellIndex> path;
  for (int id = target; id != -1; id = parent[id]) path.push_back(dims.cell(id));
  std::reverse(path.begin(), path.end());
  return path;
}

VelocityCommand follow_path(const std::vector<CellIndex>& path, const GridDims& dims,
                            const Vec2& position, double heading, bool blocked,
                            const MotionLimits& limits) {
  if (path.empty()) return {0.0, 0.0};
  Vec2 target = dims.center(path.back());
  for (const CellIndex& c : path) {
    const Vec2 p = dims.center(c);
    if (distance(p, position) >= 0.5) {
      target = p;
      break;
    }
  }
  const double err =
      normalize_angle(std::atan2(target.y - position.y, target.x - position.x) - heading);
  if (blocked) return {0.0, err >= 0.0 ? 0.75 * limits.w_max : -0.75 * limits.w_max};
  VelocityCommand cmd;
  cmd.w = std::clamp(2.5 * err, -limits.w_max, limits.w_max);
  cmd.v = std::abs(err) < 1.2 ? limits.v_max * std::max(0.15, std::cos(err)) : 0.0;
  return cmd;
}

}  // namespace

RobotAgent::RobotAgent(int id, const ScenarioConfig& config, const GridDims& dims)
    : id_(id), cfg_(config), dims_(dims) {
  cfg_.apply_default_starts();
  odom_ = cfg_.starts[id_];
  pose_belief_ = PoseBelief::uniform_at(odom_.position(), cfg_.hypotheses);
  belief_ = BeliefGrid::unknown(dims_);
  self_observed_.assign(dims_.size(), 0);
  bin_size_ = cfg_.gp_bin_m;
  peer_est_.resize(cfg_.robots);
  peer_known_.assign(cfg_.robots, 1);  // deployment poses are shared config
  peer_goals_.resize(cfg_.robots);
  for (int j = 0; j < cfg_.robots; ++j) peer_est_[j] = cfg_.starts[j].position();
  last_progress_pos_ = odom_.position();
}

void RobotAgent::ingest(const AgentInputs& inputs) {
  step_ = inputs.step;
  events_.clear();
  blocked_ = inputs.blocked;
  goal_changed_ = false;

  const Pose2D prev = odom_;
  odom_ = integrate_unicycle(odom_, inputs.odo_v, inputs.odo_w, cfg_.dt);
  odom_delta_ = odom_.position() - prev.position();

  Rng process = derived_rng(cfg_.seed, kTagProcess, static_cast<std::uint64_t>(id_),
                            static_cast<std::uint64_t>(step_));
  for (PoseHypothesis& h : pose_belief_.hypotheses) {
    h.position += odom_delta_;
    h.position.x += process.gaussian(cfg_.process_sigma);
    h.position.y += process.gaussian(cfg_.process_sigma);
  }

  beacons_.clear();
  for (const Message& msg : inputs.inbox) {
    switch (msg.kind) {
      case MessageKind::RssiBeacon:
        beacons_.emplace_back(msg.sender, msg.rssi_dbm);
        break;
      case MessageKind::GpShare:
        if (msg.gp) {
          auto& slot = msg.gp->field == GpField::Occupancy ? received_occ_[msg.sender]
                                                           : received_rssi_[msg.sender];
          slot.payload = *msg.gp;
          slot.fitted.reset();
          if (msg.gp->field == GpField::Occupancy) {
            // Wall samples transfer verbatim: they carry exact cells the
            // sender confirmed occupied. Cells the sender no longer claims
            // are retracted so stale drifted copies heal.
            std::set<CellIndex> claimed;
            for (const GpSample& sample : msg.gp->samples) {
              if (sample.value < 0.9) continue;
              const CellIndex c = dims_.cell_at(sample.position);
              if (!dims_.in_bounds(c)) continue;
              claimed.insert(c);
              const int id = dims_.index(c);
              if (!self_observed_[id])
                belief_.value[id] = std::max(belief_.value[id], 0.9);
            }
            std::set<CellIndex>& previous = imported_walls_[msg.sender];
            for (const CellIndex& c : previous) {
              if (claimed.count(c) || self_observed_[dims_.index(c)]) continue;
              bool other = false;
              for (const auto& [peer, cells] : imported_walls_) {
                if (peer != msg.sender && cells.count(c)) other = true;
              }
              if (!other) belief_.value[dims_.index(c)] = 0.5;
            }
            previous = std::move(claimed);
          }
        }
        break;
      case MessageKind::HullShare:
        if (msg.sender >= 0 && msg.sender < cfg_.robots)
          peer_goals_[msg.sender] = msg.goal_claim;
        break;
    }
  }
  std::sort(beacons_.begin(), beacons_.end());
  // Exponential smoothing per sender knocks the shadowing noise down before
  // ranging; the smoothed value replaces the raw sample.
  const double alpha = std::clamp(cfg_.beacon_ema_alpha, 0.0, 1.0);
  for (auto& [sender, dbm] : beacons_) {
    auto it = beacon_ema_.find(sender);
    if (it == beacon_ema_.end()) {
      beacon_ema_[sender] = dbm;
    } else {
      it->second += alpha * (dbm - it->second);
      dbm = it->second;
    }
  }

  // Body-anchored observation evidence from the scan, deduplicated on a
  // resolution lattice; occupied evidence wins over free.
  evidence_.clear();
  const double res = dims_.resolution;
  std::map<std::pair<int, int>, std::size_t> dedup;
  const int stride = std::max(1, cfg_.evidence_beam_stride);
  const int beams = static_cast<int>(inputs.scan.ranges.size());
  for (int k = 0; k < beams; k += stride) {
    const double rel = beams == 1 ? 0.0
                                  : -cfg_.sensor.fov / 2.0 +
                                        cfg_.sensor.fov * k / (beams - 1);
    const double ang = odom_.theta + rel;
    const Vec2 dir{std::cos(ang), std::sin(ang)};
    const double range = inputs.scan.ranges[k];
    auto push = [&](const Vec2& offset, double value, double weight) {
      const std::pair<int, int> key{static_cast<int>(std::lround(offset.x / res)),
                                    static_cast<int>(std::lround(offset.y / res))};
      auto it = dedup.find(key);
      if (it == dedup.end()) {
        dedup[key] = evidence_.size();
        evidence_.push_back({offset, value, weight});
      } else if (value > evidence_[it->second].value) {
        evidence_[it->second] = {offset, value, weight};  // hit wins outright
      }
    };
    for (double t = res * 0.5; t < range - res * 0.75; t += res)
      push(dir * t, 0.0, 0.4);
    // The surface lies at `range`, so the occupied cell starts there: nudge
    // the endpoint half a cell inward to land inside it.
    if (inputs.scan.hit[k]) push(dir * (range + res * 0.5), 1.0, 3.0);
  }

  refit_models();
}

std::vector<GpSample> RobotAgent::occ_training_set() const {
  std::vector<GpSample> samples;
  samples.reserve(occ_bins_.size() + 180);
  for (const auto& [key, bin] : occ_bins_) {
    samples.push_back(
        {{(key.first + 0.5) * bin_size_, (key.second + 0.5) * bin_size_},
         bin.sum / bin.count});
  }
  // Walls at full resolution; thin structure does not survive the coarse
  // free-space binning. Deterministic subsampling under a fixed budget.
  const std::size_t wall_budget = 160;
  const std::size_t stride = 1 + wall_cells_.size() / wall_budget;
  std::size_t i = 0;
  for (const CellIndex& c : wall_cells_) {
    if (i++ % stride) continue;
    samples.push_back({dims_.center(c), 1.0});
  }
  return samples;
}

void RobotAgent::refit_models() {
  const bool plan_step = step_ % cfg_.plan_every == 0;
  if (plan_step) {
    if (occ_gp_dirty_ && !occ_bins_.empty()) {
      try {
        occ_gp_ = fit_gp(occ_training_set(), cfg_.gp_kernel);
        occ_gp_dirty_ = false;
      } catch (const SingularGramError&) {
        events_.push_back("occ gp fit failed (singular gram)");
      }
    }
    for (auto& [sender, rec] : received_occ_) {
      if (!rec.fitted && !rec.payload.samples.empty()) {
        try {
          rec.fitted = fit_gp(rec.payload.samples, rec.payload.kernel);
        } catch (const SingularGramError&) {
          rec.fitted.reset();
        }
      }
    }
  }
  if (rssi_gp_dirty_ && step_ % cfg_.k_share == 0 && rssi_samples_.size() >= 3) {
    Kernel k;
    k.lengthscale = 2.0;
    k.signal_var = 50.0;
    k.noise_var = std::max(4.0, cfg_.channel.shadowing_sigma_db *
                                    cfg_.channel.shadowing_sigma_db);
    try {
      rssi_gp_ = fit_gp(rssi_samples_, k);
      rssi_gp_dirty_ = false;
    } catch (const SingularGramError&) {
    }
  }
  for (auto& [sender, rec] : received_rssi_) {
    if (!rec.fitted && rec.payload.samples.size() >= 3) {
      try {
        rec.fitted = fit_gp(rec.payload.samples, rec.payload.kernel);
      } catch (const SingularGramError&) {
        rec.fitted.reset();
      }
    }
  }
}

std::vector<int> RobotAgent::fusion_window_cells() const {
  // Unexplored cells worth querying: own sensing disc plus the support discs
  // of received models.
  std::vector<char> mark(dims_.size(), 0);
  const Vec2 est = pose_belief_.mean();
  const double r = cfg_.sensor.range_max;
  const CellIndex c0 = dims_.cell_at(est);
  const int span = static_cast<int>(std::ceil(r / dims_.resolution)) + 1;
  for (int dy = -span; dy <= span; ++dy) {
    for (int dx = -span; dx <= span; ++dx) {
      const CellIndex c{c0.cx + dx, c0.cy + dy};
      if (!dims_.in_bounds(c)) continue;
      if (distance(dims_.center(c), est) > r) continue;
      mark[dims_.index(c)] = 1;
    }
  }
  const int sup = static_cast<int>(std::ceil(cfg_.gp_support_radius / dims_.resolution));
  auto mark_support = [&](const std::vector<Vec2>& inputs) {
    for (const Vec2& p : inputs) {
      const CellIndex pc = dims_.cell_at(p);
      for (int dy = -sup; dy <= sup; ++dy) {
        for (int dx = -sup; dx <= sup; ++dx) {
          const CellIndex c{pc.cx + dx, pc.cy + dy};
          if (dims_.in_bounds(c)) mark[dims_.index(c)] = 1;
        }
      }
    }
  };
  if (occ_gp_) mark_support(occ_gp_->inputs);
  for (const auto& [sender, rec] : received_occ_) {
    if (rec.fitted) mark_support(rec.fitted->inputs);
  }
  // Cells near the robot are queried every round; the rest of the window
  // rotates through four interleaved sub-lattices to bound prediction cost.
  const int phase = static_cast<int>((step_ / std::max(1, cfg_.plan_every)) % 4);
  const int px = phase % 2;
  const int py = phase / 2;
  std::vector<int> cells;
  for (int id = 0; id < static_cast<int>(dims_.size()); ++id) {
    if (!mark[id] || belief_.explored[id]) continue;
    const CellIndex c = dims_.cell(id);
    const bool near = distance(dims_.center(c), est) <= 0.6 * r;
    if (near || ((c.cx & 1) == px && (c.cy & 1) == py)) cells.push_back(id);
  }
  return cells;
}

RobotAgent::PipelineAOut RobotAgent::pipeline_a() const {
  PipelineAOut out;

  if (!beacons_.empty()) {
    double mean_dbm = 0.0;
    for (const auto& [sender, dbm] : beacons_) mean_dbm += dbm;
    out.rssi_observed = mean_dbm / static_cast<double>(beacons_.size());
  }
  if (rssi_gp_ && !beacons_.empty()) {
    std::vector<const GpModel*> received;
    for (const auto& [sender, rec] : received_rssi_)
      if (rec.fitted) received.push_back(&*rec.fitted);
    std::vector<int> hyp_cells;
    hyp_cells.reserve(pose_belief_.hypotheses.size());
    for (const PoseHypothesis& h : pose_belief_.hypotheses) {
      CellIndex c = dims_.cell_at(h.position);
      c.cx = std::clamp(c.cx, 0, dims_.width - 1);
      c.cy = std::clamp(c.cy, 0, dims_.height - 1);
      hyp_cells.push_back(dims_.index(c));
    }
    FuseOptions fo;
    fo.em_iters = 1;
    fo.support_radius = 2.0;
    const std::size_t window = std::min<std::size_t>(rssi_samples_.size(), 40);
    const std::vector<GpSample> recent(rssi_samples_.end() - window,
                                       rssi_samples_.end());
    FusedField f = fuse_gps(*rssi_gp_, received, dims_, hyp_cells, recent, fo);
    out.rssi_predicted = f.mean;
    out.rssi_valid = true;
  }

  const bool plan_step = step_ % cfg_.plan_every == 0;
  if (occ_gp_ && plan_step) {
    std::vector<const GpModel*> received;
    for (const auto& [sender, rec] : received_occ_)
      if (rec.fitted) received.push_back(&*rec.fitted);
    const std::vector<GpSample> observations = occ_training_set();
    FuseOptions fo;
    fo.em_iters = cfg_.gp_em_iters;
    fo.support_radius = cfg_.gp_support_radius;
    fo.obs_radius = cfg_.gp_kernel.lengthscale;
    out.field = fuse_gps(*occ_gp_, received, dims_, fusion_window_cells(),
                         observations, fo);
    out.field_valid = true;
  }
  return out;
}

RobotAgent::PipelineBOut RobotAgent::pipeline_b() const {
  PipelineBOut out;
  if (beacons_.empty()) return out;

  std::vector<RangeMeasurement> ranges;
  for (const auto& [sender, dbm] : beacons_) {
    if (sender < 0 || sender >= cfg_.robots || sender == id_) continue;
    const RangeEstimate est = rssi_to_range(dbm, cfg_.channel);
    ranges.push_back({id_, sender, dbm, est.range, est.variance});
  }
  if (ranges.empty()) return out;

  const Rpmg rpmg = build_rpmg(cfg_.robots, ranges, cfg_.connectivity_dbm);
  std::vector<Vec2> previous = peer_est_;
  previous[id_] = pose_belief_.mean();

  MotionConstraint motion{cfg_.limits.v_max, cfg_.dt, cfg_.motion_margin};
  Erpmg erpmg = expand_to_erpmg(rpmg, previous, motion, cfg_.k_candidates, id_,
                                cfg_.graph_cap, dims_.resolution * 0.5);
  OptimizeOptions oo;
  oo.workspace = dims_;
  OptimizeResult res = optimize_graph(erpmg, oo);

  out.valid = true;
  out.converged = res.converged;
  out.residual = res.graphs[res.best].residual;
  out.ego_hypotheses = res.marginals[id_];
  out.peer_positions = res.best_positions();
  out.peer_updated.assign(cfg_.robots, false);
  for (const RangeMeasurement& e : rpmg.edges) {
    const int other = e.a == id_ ? e.b : e.a;
    out.peer_updated[other] = true;
  }
  return out;
}

void RobotAgent::join(const PipelineAOut& a, const PipelineBOut& b) {
  double residual = 0.0;
  if (b.valid) {
    residual = b.residual;
    if (!b.converged) events_.push_back("rloc optimizer hit iteration cap");
    // rloc likelihood over the candidate-graph marginal.
    const double s2 = 2.0 * cfg_.rloc_sigma * cfg_.rloc_sigma;
    for (PoseHypothesis& h : pose_belief_.hypotheses) {
      double lik = 0.0;
      for (const PositionEstimate& c : b.ego_hypotheses)
        lik += c.belief * std::exp(-squared_norm(h.position - c.position) / s2);
      h.weight *= std::max(lik, 1e-12);
    }
    pose_belief_.normalize();
    for (int j = 0; j < cfg_.robots; ++j) {
      if (j != id_ && b.peer_updated[j]) {
        // Damped tracking: jumping to every noisy solution feeds estimation
        // noise back into the next step's candidate scoring.
        peer_est_[j] += (b.peer_positions[j] - peer_est_[j]) * 0.5;
      }
    }
  }
  // On rloc silence the propagated (dead-reckoning) prior stands.

  ObservationSet obs;
  obs.cells = evidence_;
  if (a.rssi_valid && cfg_.localization_mode == "full") {
    obs.has_rssi = true;
    obs.rssi_observed = a.rssi_observed;
    obs.rssi_predicted = a.rssi_predicted;
    obs.rssi_sigma = std::max(3.0, cfg_.channel.shadowing_sigma_db);
  }

  RaoBlackwellParams params{cfg_.likelihood_sigma, cfg_.map_rate,
                            static_cast<std::size_t>(cfg_.likelihood_max_cells)};
  if (cfg_.localization_mode == "full") {
    pose_belief_ = update_pose_belief(pose_belief_, belief_, obs, params);
    if (pose_belief_.degenerate) events_.push_back("pose belief degenerate, reset");
  } else {
    pose_belief_.psi = 1.0;
  }
  last_psi_ = pose_belief_.psi;
  last_entropy_ = pose_entropy(pose_belief_);

  // Endpoint association for the map write: a hit landing beside an
  // established wall is that wall seen through sub-cell pose error, so the
  // paint snaps onto it instead of growing a drifted duplicate. The pose
  // likelihood above deliberately used the raw offsets.
  ObservationSet map_obs = obs;
  Vec2 snap_sum;
  int snap_count = 0;
  {
    const Vec2 anchor = pose_belief_.mean();
    for (EvidenceCell& ev : map_obs.cells) {
      const CellIndex c = dims_.cell_at(anchor + ev.offset);
      if (!dims_.in_bounds(c)) continue;
      const double landing = belief_.value[dims_.index(c)];
      if (ev.value < 0.5) {
        // Grazing sweeps erode true walls under drift; clearing next to an
        // established wall proceeds at reduced gain.
        for (int dy = -1; dy <= 1 && ev.weight > 0.2; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const CellIndex nb{c.cx + dx, c.cy + dy};
            if (dims_.in_bounds(nb) && belief_.value[dims_.index(nb)] >= 0.85) {
              ev.weight *= 0.5;
              break;
            }
          }
        }
        continue;
      }
      // Mode-seeking association: the hit belongs to the locally strongest
      // established wall cell unless the landing cell already matches it.
      double best = std::max(landing + 0.03, 0.85);
      CellIndex target = c;
      bool found = false;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const CellIndex nb{c.cx + dx, c.cy + dy};
          if (!dims_.in_bounds(nb)) continue;
          const double v = belief_.value[dims_.index(nb)];
          if (v >= best) {
            best = v;
            target = nb;
            found = true;
          }
        }
      }
      if (found) {
        const Vec2 displaced = dims_.center(target) - (anchor + ev.offset);
        snap_sum += displaced;
        ++snap_count;
        ev.offset = dims_.center(target) - anchor;
      }
    }
  }
  (void)snap_sum;
  (void)snap_count;
  const BeliefGrid updated = update_map_belief(belief_, pose_belief_, map_obs, params);
  belief_.value = updated.value;

  // Systematic resampling when the effective sample size collapses.
  double sum_sq = 0.0;
  for (const PoseHypothesis& h : pose_belief_.hypotheses) sum_sq += h.weight * h.weight;
  const double ess = 1.0 / std::max(sum_sq, 1e-300);
  const int n_s = static_cast<int>(pose_belief_.hypotheses.size());
  if (ess < 0.5 * n_s) {
    Rng rng = derived_rng(cfg_.seed, kTagResample, static_cast<std::uint64_t>(id_),
                          static_cast<std::uint64_t>(step_));
    std::vector<PoseHypothesis> next;
    next.reserve(n_s);
    const double u0 = rng.uniform() / n_s;
    double cum = pose_belief_.hypotheses[0].weight;
    std::size_t i = 0;
    for (int m = 0; m < n_s; ++m) {
      const double u = u0 + static_cast<double>(m) / n_s;
      while (u > cum && i + 1 < pose_belief_.hypotheses.size())
        cum += pose_belief_.hypotheses[++i].weight;
      PoseHypothesis h = pose_belief_.hypotheses[i];
      h.weight = 1.0 / n_s;
      h.position.x += rng.gaussian(cfg_.process_sigma * 0.5);
      h.position.y += rng.gaussian(cfg_.process_sigma * 0.5);
      next.push_back(h);
    }
    pose_belief_.hypotheses = std::move(next);
  }

  const Vec2 est = pose_belief_.mean();

  // Feed the exploration GP with this step's evidence at corrected positions.
  for (const EvidenceCell& ev : map_obs.cells) {
    const Vec2 p = est + ev.offset;
    const CellIndex c = dims_.cell_at(p);
    if (dims_.in_bounds(c)) {
      const int id = dims_.index(c);
      self_observed_[id] = 1;
      if (ev.value >= 0.5 && belief_.value[id] >= 0.75)
        wall_cells_.insert(c);
      else if (ev.value < 0.5 && belief_.value[id] < 0.55)
        wall_cells_.erase(c);
    }
    const std::pair<int, int> key{static_cast<int>(std::floor(p.x / bin_size_)),
                                  static_cast<int>(std::floor(p.y / bin_size_))};
    Bin& bin = occ_bins_[key];
    bin.sum += ev.value;
    bin.count += 1;
  }
  if (!evidence_.empty()) occ_gp_dirty_ = true;
  if (static_cast<int>(occ_bins_.size()) > cfg_.gp_max_points) {
    // Coarsen the binning grid to stay inside the training budget.
    bin_size_ *= 1.3;
    std::map<std::pair<int, int>, Bin> rebinned;
    for (const auto& [key, bin] : occ_bins_) {
      const Vec2 p{(key.first + 0.5) * (bin_size_ / 1.3),
                   (key.second + 0.5) * (bin_size_ / 1.3)};
      const std::pair<int, int> nk{static_cast<int>(std::floor(p.x / bin_size_)),
                                   static_cast<int>(std::floor(p.y / bin_size_))};
      Bin& nb = rebinned[nk];
      nb.sum += bin.sum;
      nb.count += bin.count;
    }
    occ_bins_ = std::move(rebinned);
    occ_gp_dirty_ = true;
  }
  if (!beacons_.empty()) {
    double mean_dbm = 0.0;
    for (const auto& [sender, dbm] : beacons_) mean_dbm += dbm;
    rssi_samples_.push_back({est, mean_dbm / beacons_.size()});
    rssi_gp_dirty_ = true;
    // The beacon-power field is smooth; a small sample set keeps the
    // per-step fused prediction cheap.
    if (static_cast<int>(rssi_samples_.size()) > 120) {
      std::vector<GpSample> halved;
      for (std::size_t i = 0; i < rssi_samples_.size(); i += 2)
        halved.push_back(rssi_samples_[i]);
      rssi_samples_ = std::move(halved);
    }
  }

  // Merge the fused field: exploration flags latch on, occupancy belief on
  // cells we never sensed ourselves follows the fused mean (peer import).
  if (a.field_valid) {
    const FusedField& f = a.field;
    for (std::size_t q = 0; q < f.cell_ids.size(); ++q) {
      const int id = f.cell_ids[q];
      const double conf = f.confidence(q);
      if (conf > belief_.confidence[id]) belief_.confidence[id] = conf;
      if (f.support[q] && conf >= cfg_.theta_explore) belief_.explored[id] = 1;
      if (!self_observed_[id] && !f.weights.empty()) {
        // Peer free space imports through the fused mean; walls arrive
        // exactly via the shared wall samples instead (the GP smears them).
        // Import only where received models dominate the mixture: the local
        // field alone must never overwrite unobserved cells.
        const double mean = std::clamp(f.mean[q], 0.0, 1.0);
        const double w_local = f.weights[0][q];
        if (w_local < 0.4 && mean < 0.35 && belief_.value[id] < 0.75)
          belief_.value[id] += 0.7 * (0.05 - belief_.value[id]);
      }
    }
  }

  // Stuck watchdog.
  if (goal_) {
    if (distance(est, last_progress_pos_) > 0.15) {
      last_progress_pos_ = est;
      stuck_steps_ = 0;
    } else if (++stuck_steps_ > 80) {
      events_.push_back("goal abandoned (no progress)");
      unreachable_.insert(*goal_);
      goal_.reset();
      path_.clear();
      stuck_steps_ = 0;
    }
  }

  trajectory_.push_back({step_, id_, est.x, est.y,
                         pose_belief_.hypotheses[pose_belief_.map_index()].weight,
                         residual});
}

void RobotAgent::plan() {
  if (step_ % (cfg_.plan_every * 50) == 0) unreachable_.clear();

  CellSets sets;
  for (int id = 0; id < static_cast<int>(dims_.size()); ++id) {
    if (!belief_.explored[id]) continue;
    const CellIndex c = dims_.cell(id);
    // Walls need committed evidence; everything else explored counts as
    // free space for the hull, including the GP-confidence fringe (value
    // 0.5) that extends past the painted cells.
    if (belief_.value[id] >= 0.6)
      sets.occupied_observed.insert(c);
    else
      sets.free_observed.insert(c);
  }
  if (sets.free_observed.empty()) {
    no_frontier_ = false;  // nothing mapped yet; not a completion vote
    return;
  }

  BoundaryParams bp;
  bp.hough.rho_resolution = dims_.resolution;
  bp.hough.vote_threshold = cfg_.hough_votes;
  bp.hough.seed = mix_seed(mix_seed(cfg_.seed, kTagHough),
                           static_cast<std::uint64_t>(id_) * 1000003 + step_);
  bp.max_corner_distance = cfg_.corner_max_distance;
  bp.inflation_depth = cfg_.inflation_depth;

  const Vec2 est = pose_belief_.mean();
  hull_ = predict_boundary(sets, dims_, bp, dims_.cell_at(est));
  hull_valid_ = true;

  // Rectilinear environments let the hull's wall lines calibrate heading:
  // the mean angular offset of the long boundary lines from the nearest axis
  // estimates the accumulated odometry heading drift. Gentle damped feedback;
  // aggressive gains oscillate against the map's own memory of past drift.
  if (cfg_.heading_alignment && !hull_.wall_lines.empty()) {
    double num = 0.0, den = 0.0;
    for (const HoughLine& l : hull_.wall_lines) {
      const double d = std::remainder(l.theta, M_PI / 2.0);
      if (std::abs(d) > M_PI / 6.0) continue;
      num += l.support * d;
      den += l.support;
    }
    if (den > 0.0) {
      const double offset = num / den;
      if (std::abs(offset) > 0.003) {
        const double step = std::clamp(0.35 * offset, -0.03, 0.03);
        odom_.theta = normalize_angle(odom_.theta - step);
      }
    }
  }

  std::vector<PeerState> peers;
  for (int j = 0; j < cfg_.robots; ++j) {
    if (j == id_ || !peer_known_[j]) continue;
    peers.push_back({peer_est_[j], peer_goals_[j]});
  }

  const std::optional<CellIndex> old_goal = goal_;
  goal_.reset();
  path_.clear();

  // Retry selection around parked cells on a scratch belief; a completion
  // vote requires the selection to come up empty with a clean blacklist.
  const CellIndex start = dims_.cell_at(est);
  for (int rounds = 0; rounds < 2 && !goal_; ++rounds) {
    BeliefGrid scratch = belief_;
    for (const CellIndex& c : unreachable_) {
      if (dims_.in_bounds(c)) scratch.explored[dims_.index(c)] = 1;
    }
    // Goals must be cells the planner can stand on; marking the rest
    // explored removes them from the candidate pool.
    for (int id = 0; id < static_cast<int>(dims_.size()); ++id) {
      if (!scratch.explored[id] && !traversable(dims_.cell(id)))
        scratch.explored[id] = 1;
    }
    for (int attempt = 0; attempt < 5; ++attempt) {
      std::optional<FrontierChoice> choice =
          select_next_region(hull_, scratch, peers, est, cfg_.lambda_peer);
      if (!choice) break;
      std::vector<CellIndex> path = astar(start, choice->cell);
      if (!path.empty()) {
        goal_ = choice->cell;
        path_ = std::move(path);
        break;
      }
      unreachable_.insert(choice->cell);
      scratch.explored[dims_.index(choice->cell)] = 1;
    }
    if (!goal_ && !unreachable_.empty() && rounds == 0) {
      unreachable_.clear();  // parked cells deserve one more look
    } else {
      break;
    }
  }

  no_frontier_ = !goal_.has_value();
  if (goal_ != old_goal) {
    goal_changed_ = true;
    if (goal_) {
      std::ostringstream ev;
      ev << "goal (" << goal_->cx << "," << goal_->cy << ")";
      events_.push_back(ev.str());
    }
  }
  if (no_frontier_ && !old_goal) return;
}

bool RobotAgent::traversable(const CellIndex& c) const {
  const int id = dims_.index(c);
  if (belief_.value[id] > 0.5 + 1e-9) return false;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      const CellIndex nb{c.cx + dx, c.cy + dy};
      if (dims_.in_bounds(nb) && belief_.value[dims_.index(nb)] > 0.75)
        return false;  // keep one clear cell to confident walls
    }
  }
  if (hull_valid_) {
    if (hull_.inflated.count(c)) return false;
    // Predicted contour walls are estimates and stay passable; observed
    // walls and sealed pockets do not.
    const PredState s = hull_.prediction[id];
    if (s == PredState::ObservedWall || s == PredState::InferredObstacle)
      return false;
  }
  return true;
}

std::vector<CellIndex> RobotAgent::astar(const CellIndex& start,
                                         const CellIndex& goal) const {
  CellIndex s = start;
  if (!traversable(s)) {
    // Drift can park the believed cell inside an obstacle; nudge to the
    // nearest traversable cell.
    bool found = false;
    for (int r = 1; r <= 4 && !found; ++r) {
      for (int dy = -r; dy <= r && !found; ++dy) {
        for (int dx = -r; dx <= r && !found; ++dx) {
          const CellIndex c{start.cx + dx, start.cy + dy};
          if (dims_.in_bounds(c) && traversable(c)) {
            s = c;
            found = true;
          }
        }
      }
    }
    if (!found) return {};
  }
  return astar_grid(
      dims_, s, goal, [this](const CellIndex& c) { return traversable(c); },
      [this](const CellIndex& c) {
        const int id = dims_.index(c);
        if (!belief_.explored[id]) return 1.6;  // unknown is passable but dearer
        return 1.0;
      });
}

VelocityCommand RobotAgent::control() {
  const Vec2 est = pose_belief_.mean();
  if (blocked_)
    ++blocked_streak_;
  else
    blocked_streak_ = 0;
  if (!goal_ || path_.empty()) {
    // Nothing to chase yet: sweep in place to grow the initial map.
    return {0.0, no_frontier_ ? 0.0 : 0.5 * cfg_.limits.w_max};
  }
  if (blocked_streak_ > 0 && blocked_streak_ <= 6) {
    // Back straight out of the contact before trying to steer again.
    return {-0.6 * cfg_.limits.v_max, 0.0};
  }
  if (blocked_streak_ > 6) {
    if (goal_) unreachable_.insert(*goal_);
    goal_.reset();
    path_.clear();
    blocked_streak_ = 0;
    return {0.0, 0.5 * cfg_.limits.w_max};
  }
  while (!path_.empty() && distance(dims_.center(path_.front()), est) < 0.25)
    path_.erase(path_.begin());
  if (path_.empty() || distance(dims_.center(*goal_), est) < 0.3) {
    // Arrived. If the cell still reads unexplored (its field refresh is
    // pending) park it so selection moves on instead of churning.
    if (goal_ && !belief_.explored[dims_.index(*goal_)]) unreachable_.insert(*goal_);
    goal_.reset();
    path_.clear();
    return {0.0, 0.0};
  }
  return follow_path(path_, dims_, est, odom_.theta, false, cfg_.limits);
}

std::vector<Message> RobotAgent::make_outbox() {
  std::vector<Message> out;
  Message beacon;
  beacon.kind = MessageKind::RssiBeacon;
  beacon.sender = id_;
  beacon.step = step_;
  out.push_back(beacon);

  if (step_ % cfg_.k_share == 0 && !occ_bins_.empty()) {
    Message share;
    share.kind = MessageKind::GpShare;
    share.sender = id_;
    share.step = step_;
    GpSharePayload payload;
    payload.field = GpField::Occupancy;
    payload.kernel = cfg_.gp_kernel;
    payload.samples = occ_training_set();
    share.gp = std::move(payload);
    out.push_back(std::move(share));

    if (rssi_samples_.size() >= 3) {
      Message rshare;
      rshare.kind = MessageKind::GpShare;
      rshare.sender = id_;
      rshare.step = step_;
      GpSharePayload rp;
      rp.field = GpField::Rssi;
      rp.kernel.lengthscale = 2.0;
      rp.kernel.signal_var = 50.0;
      rp.kernel.noise_var = std::max(4.0, cfg_.channel.shadowing_sigma_db *
                                              cfg_.channel.shadowing_sigma_db);
      rp.samples = rssi_samples_;
      rshare.gp = std::move(rp);
      out.push_back(std::move(rshare));
    }
  }
  if (goal_changed_) {
    Message claim;
    claim.kind = MessageKind::HullShare;
    claim.sender = id_;
    claim.step = step_;
    claim.goal_claim = goal_;
    out.push_back(std::move(claim));
  }
  return out;
}

BeliefGrid RobotAgent::final_map() const {
  BeliefGrid out = belief_;
  if (!hull_valid_) return out;
  // Sealed pockets the completed hull marks unreachable (shelf cores, wall
  // interiors) count as occupied in the delivered map.
  for (int id = 0; id < static_cast<int>(dims_.size()); ++id) {
    if (hull_.prediction[id] == PredState::InferredObstacle &&
        !self_observed_[id]) {
      out.value[id] = std::max(out.value[id], 0.85);
    }
  }
  // Hygiene: drop isolated occupied speckles, close one-cell pinholes.
  BeliefGrid cleaned = out;
  for (int cy = 0; cy < dims_.height; ++cy) {
    for (int cx = 0; cx < dims_.width; ++cx) {
      const int id = dims_.index({cx, cy});
      int occ_neighbors = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const CellIndex nb{cx + dx, cy + dy};
          if (dims_.in_bounds(nb) && out.value[dims_.index(nb)] > 0.5)
            ++occ_neighbors;
        }
      }
      if (out.value[id] > 0.5 && occ_neighbors == 0) cleaned.value[id] = 0.05;
      if (out.value[id] <= 0.5 && occ_neighbors >= 7) cleaned.value[id] = 0.9;
    }
  }
  return cleaned;
}

AgentOutputs RobotAgent::step(const AgentInputs& inputs, PipelineOrder order) {
  ingest(inputs);

  // The two pipelines are const over the ingested state; execution order
  // cannot change their outputs.
  PipelineAOut a;
  PipelineBOut b;
  if (order == PipelineOrder::AThenB) {
    a = pipeline_a();
    b = pipeline_b();
  } else {
    b = pipeline_b();
    a = pipeline_a();
  }
  join(a, b);

  if (step_ % cfg_.plan_every == 0 || !goal_) plan();

  AgentOutputs out;
  out.command = control();
  out.outbox = make_outbox();
  out.no_frontier = no_frontier_;
  out.events = events_;
  return out;
}

// ---------------------------------------------------------------------------

FrontierAgent::FrontierAgent(int id, const ScenarioConfig& config,
                             const GridDims& dims)
    : id_(id), cfg_(config), dims_(dims) {
  cfg_.apply_default_starts();
  odom_ = cfg_.starts[id_];
  belief_ = BeliefGrid::unknown(dims_);
}

bool FrontierAgent::traversable(const CellIndex& c) const {
  if (belief_.value[dims_.index(c)] > 0.5 + 1e-9) return false;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      const CellIndex nb{c.cx + dx, c.cy + dy};
      if (dims_.in_bounds(nb) && belief_.value[dims_.index(nb)] > 0.9)
        return false;
    }
  }
  return true;
}

std::vector<CellIndex> FrontierAgent::astar(const CellIndex& start,
                                            const CellIndex& goal) const {
  CellIndex s = start;
  if (!traversable(s)) {
    bool found = false;
    for (int r = 1; r <= 4 && !found; ++r)
      for (int dy = -r; dy <= r && !found; ++dy)
        for (int dx = -r; dx <= r && !found; ++dx) {
          const CellIndex c{start.cx + dx, start.cy + dy};
          if (dims_.in_bounds(c) && traversable(c)) {
            s = c;
            found = true;
          }
        }
    if (!found) return {};
  }
  return astar_grid(
      dims_, s, goal, [this](const CellIndex& c) { return traversable(c); },
      [this](const CellIndex& c) {
        return belief_.explored[dims_.index(c)] ? 1.0 : 1.6;
      });
}

AgentOutputs FrontierAgent::step(const AgentInputs& inputs, PipelineOrder) {
  step_ = inputs.step;
  odom_ = integrate_unicycle(odom_, inputs.odo_v, inputs.odo_w, cfg_.dt);
  blocked_ = inputs.blocked;

  // Direct evidence painting at the dead-reckoned pose.
  const double res = dims_.resolution;
  const int stride = std::max(1, cfg_.evidence_beam_stride);
  const int beams = static_cast<int>(inputs.scan.ranges.size());
  const Vec2 pos = odom_.position();
  for (int k = 0; k < beams; k += stride) {
    const double rel = beams == 1 ? 0.0
                                  : -cfg_.sensor.fov / 2.0 +
                                        cfg_.sensor.fov * k / (beams - 1);
    const double ang = odom_.theta + rel;
    const Vec2 dir{std::cos(ang), std::sin(ang)};
    const double range = inputs.scan.ranges[k];
    auto paint = [&](const Vec2& p, double value) {
      const CellIndex c = dims_.cell_at(p);
      if (!dims_.in_bounds(c)) return;
      const int id = dims_.index(c);
      if (value >= 0.5) {
        belief_.value[id] = 1.0;
      } else if (belief_.value[id] < 0.99) {
        belief_.value[id] = 0.0;
      }
      belief_.confidence[id] = 1.0;
      belief_.explored[id] = 1;
    };
    for (double t = res * 0.5; t < range - res * 0.75; t += res)
      paint(pos + dir * t, 0.0);
    if (inputs.scan.hit[k]) paint(pos + dir * (range + res * 0.5), 1.0);
  }

  // Watchdogs: escape contacts by reversing, abandon goals without progress.
  if (blocked_)
    ++blocked_streak_;
  else
    blocked_streak_ = 0;
  if (goal_) {
    if (distance(pos, last_progress_pos_) > 0.15) {
      last_progress_pos_ = pos;
      stuck_steps_ = 0;
    } else if (++stuck_steps_ > 80) {
      blacklist_.insert(*goal_);
      goal_.reset();
      path_.clear();
      stuck_steps_ = 0;
    }
  }
  if (step_ % 500 == 0) blacklist_.clear();

  // Nearest frontier: explored free cell adjacent to unknown, by BFS.
  bool no_frontier = false;
  const bool replan = !goal_ || step_ % cfg_.plan_every == 0;
  if (replan) {
    goal_.reset();
    path_.clear();
    const CellIndex start = dims_.cell_at(pos);
    std::deque<CellIndex> queue;
    std::vector<char> seen(dims_.size(), 0);
    if (dims_.in_bounds(start)) {
      queue.push_back(start);
      seen[dims_.index(start)] = 1;
    }
    while (!queue.empty()) {
      const CellIndex c = queue.front();
      queue.pop_front();
      const int id = dims_.index(c);
      if (belief_.explored[id] && belief_.value[id] < 0.5 &&
          blacklist_.find(c) == blacklist_.end() && traversable(c)) {
        bool frontier = false;
        for (int dy = -1; dy <= 1 && !frontier; ++dy)
          for (int dx = -1; dx <= 1 && !frontier; ++dx) {
            const CellIndex nb{c.cx + dx, c.cy + dy};
            if (dims_.in_bounds(nb) && !belief_.explored[dims_.index(nb)])
              frontier = true;
          }
        if (frontier && distance(dims_.center(c), pos) > 0.3) {
          goal_ = c;
          break;
        }
      }
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const CellIndex nb{c.cx + dx, c.cy + dy};
          if (!dims_.in_bounds(nb) || seen[dims_.index(nb)]) continue;
          if (!traversable(nb)) continue;
          seen[dims_.index(nb)] = 1;
          queue.push_back(nb);
        }
    }
    if (goal_) {
      path_ = astar(start, *goal_);
      if (path_.empty()) {
        blacklist_.insert(*goal_);
        goal_.reset();
      }
    }
    bool any_explored = false;
    for (std::size_t i = 0; i < belief_.explored.size() && !any_explored; ++i)
      any_explored = belief_.explored[i];
    no_frontier = any_explored && !goal_;
  }

  AgentOutputs out;
  if (blocked_streak_ > 0 && blocked_streak_ <= 6) {
    out.command = {-0.6 * cfg_.limits.v_max, 0.0};
  } else if (blocked_streak_ > 6) {
    if (goal_) blacklist_.insert(*goal_);
    goal_.reset();
    path_.clear();
    blocked_streak_ = 0;
    out.command = {0.0, 0.5 * cfg_.limits.w_max};
  } else if (goal_ && !path_.empty()) {
    while (!path_.empty() && distance(dims_.center(path_.front()), pos) < 0.25)
      path_.erase(path_.begin());
    if (path_.empty() || distance(dims_.center(*goal_), pos) < 0.3) {
      goal_.reset();
    } else {
      out.command = follow_path(path_, dims_, pos, odom_.theta, false, cfg_.limits);
    }
  } else if (!no_frontier) {
    out.command = {0.0, 0.5 * cfg_.limits.w_max};
  }
  out.no_frontier = no_frontier;
  trajectory_.push_back({step_, id_, pos.x, pos.y, 1.0, 0.0});
  return out;
}

std::unique_ptr<AgentBase> make_agent(int id, const ScenarioConfig& config,
                                      const GridDims& dims) {
  if (config.baseline == "frontier")
    return std::make_unique<FrontierAgent>(id, config, dims);
  return std::make_unique<RobotAgent>(id, config, dims);
}

}  // namespace seal
