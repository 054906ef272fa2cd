#include "seal/sim.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "seal/errors.hpp"
#include "seal/io.hpp"
#include "seal/rng.hpp"

namespace seal {

namespace {

constexpr std::uint64_t kTagLidar = 0x11;
constexpr std::uint64_t kTagOdo = 0x12;
constexpr std::uint64_t kTagRssi = 0x13;

}  // namespace

Simulation::Simulation(const ScenarioConfig& config) : cfg_(config) {
  cfg_.apply_default_starts();
  cfg_.validate();
  world_ = load_world(cfg_.world, cfg_.resolution);

  const int n = cfg_.robots;
  for (int i = 0; i < n; ++i) {
    if (world_.occupied_at(cfg_.starts[i].position()))
      throw ConfigError("start pose " + std::to_string(i) + " is inside an obstacle");
    agents_.push_back(make_agent(i, cfg_, world_.dims));
    true_poses_.push_back(cfg_.starts[i]);
  }
  pending_cmd_.assign(n, {});
  pending_out_.assign(n, {});
  blocked_.assign(n, false);
  executed_v_.assign(n, 0.0);
  executed_w_.assign(n, 0.0);
  distances_.assign(n, 0.0);
  no_frontier_.assign(n, false);
  est_traj_.assign(n, {});
  true_traj_.assign(n, {});
  team_explored_.assign(world_.dims.size(), 0);
}

void Simulation::exchange_and_step(long step) {
  const int n = cfg_.robots;

  // Pairwise RSSI measured on the physical channel at the current poses; the
  // stream is addressed by (step, rx, tx) so evaluation order is irrelevant.
  std::vector<double> dbm(static_cast<std::size_t>(n) * n, -1e9);
  for (int rx = 0; rx < n; ++rx) {
    for (int tx = 0; tx < n; ++tx) {
      if (rx == tx) continue;
      Rng rng = derived_rng(cfg_.seed, kTagRssi,
                            static_cast<std::uint64_t>(step) * n * n + rx * n + tx);
      dbm[rx * n + tx] =
          sample_rssi(cfg_.channel, true_poses_[tx].position(),
                      true_poses_[rx].position(), rng);
    }
  }
  auto connected = [&](int rx, int tx) {
    return dbm[rx * n + tx] >= cfg_.connectivity_dbm;
  };

  // Inboxes: fresh beacons plus the previous round's shares, gated by the
  // connectivity at delivery time, ordered by (sender, kind).
  std::vector<std::vector<Message>> inboxes(n);
  for (int rx = 0; rx < n; ++rx) {
    for (int tx = 0; tx < n; ++tx) {
      if (rx == tx || !connected(rx, tx)) continue;
      for (const Message& m : pending_out_[tx]) {
        if (m.kind == MessageKind::RssiBeacon) {
          Message beacon = m;
          beacon.rssi_dbm = dbm[rx * n + tx];
          inboxes[rx].push_back(std::move(beacon));
        } else {
          inboxes[rx].push_back(m);
        }
      }
    }
    std::sort(inboxes[rx].begin(), inboxes[rx].end(),
              [](const Message& a, const Message& b) {
                return std::tie(a.sender, a.kind) < std::tie(b.sender, b.kind);
              });
  }

  for (int i = 0; i < n; ++i) {
    AgentInputs inputs;
    inputs.step = step;
    Rng lidar_rng = derived_rng(cfg_.seed, kTagLidar, static_cast<std::uint64_t>(i),
                                static_cast<std::uint64_t>(step));
    inputs.scan = cast_lidar(world_, true_poses_[i], cfg_.sensor, lidar_rng);
    inputs.inbox = std::move(inboxes[i]);
    Rng odo_rng = derived_rng(cfg_.seed, kTagOdo, static_cast<std::uint64_t>(i),
                              static_cast<std::uint64_t>(step));
    inputs.odo_v = executed_v_[i] + odo_rng.gaussian(cfg_.odom_sigma_v);
    inputs.odo_w = executed_w_[i] + odo_rng.gaussian(cfg_.odom_sigma_w);
    inputs.blocked = blocked_[i];

    const auto t0 = std::chrono::steady_clock::now();
    AgentOutputs out = agents_[i]->step(inputs);
    const auto t1 = std::chrono::steady_clock::now();
    if (i == 0)
      agent0_times_.push_back(std::chrono::duration<double>(t1 - t0).count());

    pending_cmd_[i] = out.command;
    pending_out_[i] = std::move(out.outbox);
    no_frontier_[i] = out.no_frontier;
    for (const std::string& ev : out.events) {
      std::ostringstream line;
      line << "step=" << step << " robot=" << i << " " << ev;
      events_.push_back(line.str());
    }

    est_traj_[i].push_back(agents_[i]->estimate());
    true_traj_[i].push_back(true_poses_[i].position());
    const BeliefGrid& b = agents_[i]->belief();
    for (std::size_t id = 0; id < team_explored_.size(); ++id)
      team_explored_[id] |= b.explored[id];
  }
}

RunReport Simulation::run() {
  const int n = cfg_.robots;
  int completion_votes = 0;
  long step = 0;
  // First round has no queued outboxes: seed beacons so localization starts
  // at step 0.
  for (int i = 0; i < n; ++i) {
    Message beacon;
    beacon.kind = MessageKind::RssiBeacon;
    beacon.sender = i;
    beacon.step = -1;
    pending_out_[i] = {beacon};
  }

  for (; step < cfg_.steps; ++step) {
    if (step > 0) {
      for (int i = 0; i < n; ++i) {
        StepResult r =
            step_kinematics(world_, true_poses_[i], pending_cmd_[i], cfg_.dt,
                            cfg_.limits);
        true_poses_[i] = r.pose;
        blocked_[i] = r.blocked;
        distances_[i] += r.distance;
        const double sign = pending_cmd_[i].v < 0.0 ? -1.0 : 1.0;
        executed_v_[i] = sign * r.distance / cfg_.dt;
        executed_w_[i] =
            std::clamp(pending_cmd_[i].w, -cfg_.limits.w_max, cfg_.limits.w_max);
        if (r.blocked) {
          std::ostringstream line;
          line << "step=" << step << " robot=" << i << " motion blocked";
          events_.push_back(line.str());
        }
      }
    }

    exchange_and_step(step);

    if ((step % 25 == 0) || step == cfg_.steps - 1) {
      BeliefGrid team = BeliefGrid::unknown(world_.dims);
      team.explored = std::vector<std::uint8_t>(team_explored_.begin(),
                                                team_explored_.end());
      SeriesPoint pt;
      pt.step = step;
      pt.explored_pct = explored_pct(team, world_);
      double ale_now = 0.0, ent = 0.0, psi = 0.0;
      for (int i = 0; i < n; ++i) {
        ale_now += distance(est_traj_[i].back(), true_traj_[i].back());
        ent += agents_[i]->last_entropy();
        psi += agents_[i]->last_psi();
      }
      pt.ale_m = ale_now / n;
      pt.mean_entropy = ent / n;
      pt.mean_psi = psi / n;
      series_.push_back(pt);
    }

    bool all_done = true;
    for (int i = 0; i < n; ++i) all_done = all_done && no_frontier_[i];
    completion_votes = all_done ? completion_votes + 1 : 0;
    if (completion_votes >= 3) {
      completed_ = true;
      ++step;
      break;
    }
  }
  steps_done_ = step;

  RunReport report;
  report.steps = steps_done_;
  report.completed = completed_;
  report.mapping_time_s = static_cast<double>(steps_done_) * cfg_.dt;

  BeliefGrid team = BeliefGrid::unknown(world_.dims);
  team.explored =
      std::vector<std::uint8_t>(team_explored_.begin(), team_explored_.end());
  report.explored_pct = explored_pct(team, world_);

  double ssim_sum = 0.0, ssim_soft_sum = 0.0, ate_sum = 0.0, ale_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    PerRobotMetrics pr;
    pr.robot = i;
    pr.distance_m = distances_[i];
    const BeliefGrid delivered = agents_[i]->final_map();
    pr.map_ssim = steps_done_ > 0 ? ssim(delivered, world_) : 0.0;
    pr.explored_pct = explored_pct(delivered, world_);
    pr.ate_m = ate(est_traj_[i], true_traj_[i]);
    pr.ale_m = ale(est_traj_[i], true_traj_[i]);
    report.per_robot.push_back(pr);
    report.total_distance_m += distances_[i];
    ssim_sum += pr.map_ssim;
    ssim_soft_sum += steps_done_ > 0 ? ssim_soft(delivered, world_) : 0.0;
    ate_sum += pr.ate_m;
    ale_sum += pr.ale_m;
  }
  report.map_ssim = ssim_sum / n;
  report.map_ssim_soft = ssim_soft_sum / n;
  report.ate_m = ate_sum / n;
  report.ale_m = ale_sum / n;
  report.series = series_;
  return report;
}

void Simulation::write_artifacts(const std::string& out_dir,
                                 const RunReport& report) const {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);

  for (int i = 0; i < cfg_.robots; ++i) {
    const BeliefGrid b = agents_[i]->final_map();
    write_map_pgm(b, agents_[i]->hull_model(),
                  (dir / ("map_" + std::to_string(i) + ".pgm")).string());
    write_belief_pgm(b, (dir / ("belief_" + std::to_string(i) + ".pgm")).string());
    if (const HullModel* hull = agents_[i]->hull_model()) {
      std::ofstream gj(dir / ("hull_" + std::to_string(i) + ".geojson"));
      gj << hull_to_geojson(*hull) << "\n";
    }
  }

  {
    std::ofstream csv(dir / "trajectory.csv");
    csv << "step,robot_id,x,y,belief,residual\n";
    csv.precision(9);
    std::vector<std::size_t> cursor(cfg_.robots, 0);
    // Interleave rows by (step, robot) for a stable file layout.
    for (long s = 0; s < steps_done_; ++s) {
      for (int i = 0; i < cfg_.robots; ++i) {
        const auto& rows = agents_[i]->trajectory();
        while (cursor[i] < rows.size() && rows[cursor[i]].step < s) ++cursor[i];
        if (cursor[i] < rows.size() && rows[cursor[i]].step == s) {
          const TrajectoryRow& r = rows[cursor[i]];
          csv << r.step << "," << r.robot << "," << r.x << "," << r.y << ","
              << r.belief << "," << r.residual << "\n";
        }
      }
    }
  }
  {
    std::ofstream csv(dir / "truth.csv");
    csv << "step,robot_id,x,y\n";
    csv.precision(9);
    const std::size_t rows = true_traj_.empty() ? 0 : true_traj_[0].size();
    for (std::size_t s = 0; s < rows; ++s) {
      for (int i = 0; i < cfg_.robots; ++i) {
        csv << s << "," << i << "," << true_traj_[i][s].x << ","
            << true_traj_[i][s].y << "\n";
      }
    }
  }
  {
    std::ofstream csv(dir / "series.csv");
    csv << "step,explored_pct,ale_m,mean_entropy,mean_psi\n";
    csv.precision(9);
    for (const SeriesPoint& p : report.series) {
      csv << p.step << "," << p.explored_pct << "," << p.ale_m << ","
          << p.mean_entropy << "," << p.mean_psi << "\n";
    }
  }
  {
    std::ofstream log(dir / "events.log");
    for (const std::string& e : events_) log << e << "\n";
  }
  {
    std::ofstream json(dir / "metrics.json");
    json << report.to_json();
  }
}

RunReport run_simulation(const ScenarioConfig& config, const std::string& out_dir) {
  Simulation sim(config);
  RunReport report = sim.run();
  if (!out_dir.empty()) sim.write_artifacts(out_dir, report);
  return report;
}

}  // namespace seal
