#include "seal/rloc.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "seal/errors.hpp"

namespace seal {

RangeEstimate rssi_to_range(double rssi_dbm, const RssiChannel& channel) {
  RangeEstimate est;
  if (rssi_dbm >= channel.p0_dbm) {
    est.range = channel.d0;
  } else {
    est.range = channel.d0 *
                std::pow(10.0, (channel.p0_dbm - rssi_dbm) /
                                   (10.0 * channel.path_loss_exponent));
  }
  // d(range)/d(rssi) = -range * ln(10) / (10 n)
  const double slope =
      est.range * std::log(10.0) / (10.0 * channel.path_loss_exponent);
  est.variance = slope * slope * channel.shadowing_sigma_db * channel.shadowing_sigma_db;
  return est;
}

double Rpmg::degree(int i) const {
  double d = 0.0;
  for (int j = 0; j < n; ++j) d += a(i, j);
  return d;
}

std::vector<double> Rpmg::laplacian() const {
  std::vector<double> l(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) l[i * n + j] = (i == j) ? degree(i) : -a(i, j);
  }
  return l;
}

Rpmg build_rpmg(int n, const std::vector<RangeMeasurement>& ranges,
                double connectivity_threshold_dbm) {
  Rpmg g;
  g.n = n;
  g.adjacency.assign(static_cast<std::size_t>(n) * n, 0.0);

  // Average duplicate directions of the same pair.
  std::map<std::pair<int, int>, RangeMeasurement> merged;
  for (const RangeMeasurement& m : ranges) {
    if (m.a == m.b) continue;  // no self-connection
    auto key = std::minmax(m.a, m.b);
    auto it = merged.find(key);
    if (it == merged.end()) {
      RangeMeasurement e = m;
      e.a = key.first;
      e.b = key.second;
      merged[key] = e;
    } else {
      RangeMeasurement& e = it->second;
      e.rssi_dbm = 0.5 * (e.rssi_dbm + m.rssi_dbm);
      e.range = 0.5 * (e.range + m.range);
      e.variance = 0.5 * e.variance + 0.5 * m.variance;  // mean of halves
    }
  }
  for (auto& [key, e] : merged) {
    if (e.rssi_dbm < connectivity_threshold_dbm) continue;
    const double w = 1.0 / std::max(e.variance, 1e-6);
    g.edges.push_back(e);
    g.adjacency[e.a * n + e.b] = w;
    g.adjacency[e.b * n + e.a] = w;
  }

  // Component count via union-find.
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& e : g.edges) parent[find(e.a)] = find(e.b);
  std::vector<int> roots;
  for (int i = 0; i < n; ++i) {
    int r = find(i);
    if (std::find(roots.begin(), roots.end(), r) == roots.end()) roots.push_back(r);
  }
  g.components = static_cast<int>(roots.size());
  g.disconnected = g.components > 1;
  return g;
}

namespace {

double candidate_cost(const Vec2& p, int robot, const Rpmg& rpmg,
                      const std::vector<Vec2>& previous) {
  double cost = 0.0;
  for (const RangeMeasurement& e : rpmg.edges) {
    if (e.a != robot && e.b != robot) continue;
    const int other = e.a == robot ? e.b : e.a;
    const double w = 1.0 / std::max(e.variance, 1e-6);
    const double d = distance(p, previous[other]) - e.range;
    cost += w * d * d;
  }
  return cost;
}

}  // namespace

Erpmg expand_to_erpmg(const Rpmg& rpmg, const std::vector<Vec2>& previous,
                      const MotionConstraint& motion, int k, int ego,
                      int graph_cap, double lattice_step) {
  if (k < 1) throw SealError("expand_to_erpmg requires k >= 1");
  const int n = rpmg.n;
  Erpmg out;
  out.rpmg = rpmg;
  out.previous = previous;
  out.motion = motion;
  out.ego = ego;
  out.candidates.resize(n);

  const double radius = motion.radius();
  const double step = std::min(lattice_step, std::max(radius / 3.0, 1e-4));

  for (int i = 0; i < n; ++i) {
    const Vec2 center = previous[i];
    bool has_edge = false;
    for (const auto& e : rpmg.edges)
      if (e.a == i || e.b == i) has_edge = true;

    if (!has_edge) {
      out.candidates[i].push_back({center, 0.0});
      continue;
    }

    std::vector<Candidate> scored;
    const int span = static_cast<int>(std::floor(radius / step));
    for (int gy = -span; gy <= span; ++gy) {
      for (int gx = -span; gx <= span; ++gx) {
        Vec2 p{center.x + gx * step, center.y + gy * step};
        if (distance(p, center) > radius + 1e-12) continue;
        scored.push_back({p, candidate_cost(p, i, rpmg, previous)});
      }
    }
    // Deterministic: lattice order breaks score ties.
    std::stable_sort(scored.begin(), scored.end(),
                     [](const Candidate& a, const Candidate& b) {
                       return a.score < b.score;
                     });
    const int keep = std::min<int>(k, static_cast<int>(scored.size()));
    out.candidates[i].assign(scored.begin(), scored.begin() + keep);
    if (out.candidates[i].empty()) out.candidates[i].push_back({center, 0.0});
  }

  // Enumerate assignments in prior-cost order with a hard cap.
  struct Partial {
    std::vector<int> pick;
    double cost;
  };
  std::vector<Partial> frontier{{{}, 0.0}};
  for (int i = 0; i < n; ++i) {
    std::vector<Partial> next;
    for (const Partial& p : frontier) {
      for (std::size_t c = 0; c < out.candidates[i].size(); ++c) {
        Partial q = p;
        q.pick.push_back(static_cast<int>(c));
        q.cost += out.candidates[i][c].score;
        next.push_back(std::move(q));
      }
    }
    std::stable_sort(next.begin(), next.end(),
                     [](const Partial& a, const Partial& b) { return a.cost < b.cost; });
    if (static_cast<int>(next.size()) > graph_cap) next.resize(graph_cap);
    frontier = std::move(next);
  }
  for (Partial& p : frontier) out.graphs.push_back(std::move(p.pick));
  return out;
}

namespace {

struct GraphProblem {
  const Erpmg& erpmg;
  const OptimizeOptions& opts;
  std::vector<int> free_vars;  // robot ids optimized (all but ego)
};

double graph_cost(const Erpmg& e, const std::vector<Vec2>& x) {
  double cost = 0.0;
  for (const RangeMeasurement& m : e.rpmg.edges) {
    const double w = 1.0 / std::max(m.variance, 1e-6);
    const double r = distance(x[m.a], x[m.b]) - m.range;
    cost += w * r * r;
  }
  return cost;
}

void project(const Erpmg& e, const OptimizeOptions& opts, int robot, Vec2& p) {
  if (opts.workspace) {
    const GridDims& d = *opts.workspace;
    p.x = std::clamp(p.x, d.resolution, d.width_m() - d.resolution);
    p.y = std::clamp(p.y, d.resolution, d.height_m() - d.resolution);
  }
  if (opts.constrain_motion_disc) {
    const Vec2 center = e.previous[robot];
    const double radius = e.motion.radius();
    const Vec2 delta = p - center;
    const double d = norm(delta);
    if (d > radius && d > 1e-12) p = center + delta * (radius / d);
  }
}

GraphSolution solve_graph(const Erpmg& e, const std::vector<int>& pick,
                          const OptimizeOptions& opts) {
  const int n = e.rpmg.n;
  GraphSolution sol;
  sol.positions.resize(n);
  for (int i = 0; i < n; ++i) sol.positions[i] = e.candidates[i][pick[i]].position;

  std::vector<int> free_vars;
  for (int i = 0; i < n; ++i)
    if (i != e.ego) free_vars.push_back(i);

  if (free_vars.empty() || e.rpmg.edges.empty()) {
    sol.residual = graph_cost(e, sol.positions);
    return sol;
  }

  const int dim = 2 * static_cast<int>(free_vars.size());
  std::vector<int> var_of(n, -1);
  for (std::size_t v = 0; v < free_vars.size(); ++v) var_of[free_vars[v]] = 2 * static_cast<int>(v);

  double cost = graph_cost(e, sol.positions);
  double lambda = 1e-6;
  bool converged = false;

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    Eigen::MatrixXd jtj = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd jtr = Eigen::VectorXd::Zero(dim);
    for (const RangeMeasurement& m : e.rpmg.edges) {
      const double w = 1.0 / std::max(m.variance, 1e-6);
      Vec2 diff = sol.positions[m.a] - sol.positions[m.b];
      double d = norm(diff);
      if (d < 1e-9) {
        diff = {1e-9, 0.0};
        d = 1e-9;
      }
      const double r = d - m.range;
      const Vec2 grad{diff.x / d, diff.y / d};
      const double sw = std::sqrt(w);
      // residual sqrt(w)*(d - z); rows for a (+grad) and b (-grad)
      double ja[2] = {sw * grad.x, sw * grad.y};
      int ia = var_of[m.a];
      int ib = var_of[m.b];
      auto add = [&](int base_i, double si, int base_j, double sj) {
        if (base_i < 0 || base_j < 0) return;
        for (int u = 0; u < 2; ++u)
          for (int v = 0; v < 2; ++v)
            jtj(base_i + u, base_j + v) += si * sj * ja[u] * ja[v];
      };
      add(ia, 1.0, ia, 1.0);
      add(ib, -1.0, ib, -1.0);
      add(ia, 1.0, ib, -1.0);
      add(ib, -1.0, ia, 1.0);
      const double swr = sw * r;
      if (ia >= 0) {
        jtr[ia] += swr * ja[0];
        jtr[ia + 1] += swr * ja[1];
      }
      if (ib >= 0) {
        jtr[ib] -= swr * ja[0];
        jtr[ib + 1] -= swr * ja[1];
      }
    }

    if (jtr.lpNorm<Eigen::Infinity>() < opts.grad_tol) {
      converged = true;
      break;
    }

    bool accepted = false;
    for (int attempt = 0; attempt < 8; ++attempt) {
      Eigen::MatrixXd damped = jtj;
      damped.diagonal().array() += lambda;
      Eigen::VectorXd delta = damped.ldlt().solve(-jtr);
      std::vector<Vec2> trial = sol.positions;
      for (std::size_t v = 0; v < free_vars.size(); ++v) {
        const int i = free_vars[v];
        trial[i].x += delta[2 * static_cast<int>(v)];
        trial[i].y += delta[2 * static_cast<int>(v) + 1];
        project(e, opts, i, trial[i]);
      }
      const double trial_cost = graph_cost(e, trial);
      if (trial_cost <= cost + 1e-15) {
        sol.positions = std::move(trial);
        cost = trial_cost;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) break;  // stuck at a projected boundary point
    if (cost < 1e-20) {
      converged = true;
      break;
    }
  }

  sol.residual = cost;
  sol.converged = converged || cost < 1e-12;
  return sol;
}

}  // namespace

OptimizeResult optimize_graph(const Erpmg& erpmg, const OptimizeOptions& opts) {
  if (erpmg.graphs.empty()) throw SealError("optimize_graph: no candidate graphs");
  OptimizeResult result;
  result.graphs.reserve(erpmg.graphs.size());
  for (const auto& pick : erpmg.graphs)
    result.graphs.push_back(solve_graph(erpmg, pick, opts));

  double best_res = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < result.graphs.size(); ++g) {
    if (result.graphs[g].residual < best_res) {
      best_res = result.graphs[g].residual;
      result.best = static_cast<int>(g);
    }
  }
  result.converged = result.graphs[result.best].converged;

  // Graph beliefs: softmax of -residual/2, stabilized by the best residual.
  double total = 0.0;
  for (auto& g : result.graphs) {
    g.belief = std::exp(-(g.residual - best_res) / 2.0);
    total += g.belief;
  }
  for (auto& g : result.graphs) g.belief /= total;

  // Per-robot marginals over distinct positions.
  const int n = erpmg.rpmg.n;
  result.marginals.resize(n);
  for (int i = 0; i < n; ++i) {
    std::vector<PositionEstimate>& hyps = result.marginals[i];
    for (const GraphSolution& g : result.graphs) {
      bool found = false;
      for (PositionEstimate& h : hyps) {
        if (distance(h.position, g.positions[i]) < 1e-9) {
          h.belief += g.belief;
          found = true;
          break;
        }
      }
      if (!found) hyps.push_back({i, g.positions[i], g.belief});
    }
  }
  return result;
}

}  // namespace seal
