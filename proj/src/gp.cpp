#include "seal/gp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "seal/errors.hpp"

namespace seal {

namespace {

// Quantized-position key for duplicate detection.
std::pair<long long, long long> pos_key(const Vec2& p) {
  return {static_cast<long long>(std::llround(p.x * 1e9)),
          static_cast<long long>(std::llround(p.y * 1e9))};
}

}  // namespace

GpModel fit_gp(const std::vector<GpSample>& samples, const Kernel& kernel) {
  if (samples.empty()) throw SealError("fit_gp requires at least one sample");
  if (kernel.lengthscale <= 0.0 || kernel.signal_var <= 0.0 || kernel.noise_var < 0.0)
    throw SealError("kernel parameters must be positive");

  GpModel model;
  model.kernel = kernel;
  model.inputs.reserve(samples.size());
  model.targets.resize(static_cast<Eigen::Index>(samples.size()));

  std::map<std::pair<long long, long long>, int> seen;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    Vec2 p = samples[i].position;
    int& count = seen[pos_key(p)];
    if (count > 0) p.x += 1e-6 * count;  // deterministic duplicate jitter
    ++count;
    model.inputs.push_back(p);
    model.targets[static_cast<Eigen::Index>(i)] = samples[i].value;
  }
  model.target_mean = model.targets.mean();

  const int n = model.size();
  Eigen::MatrixXd gram(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const double k = kernel(model.inputs[i], model.inputs[j]);
      gram(i, j) = k;
      gram(j, i) = k;
    }
  }

  double ridge = 0.0;
  while (true) {
    Eigen::MatrixXd reg = gram;
    reg.diagonal().array() += kernel.noise_var + ridge;
    model.factorization.compute(reg);
    if (model.factorization.info() == Eigen::Success) break;
    if (ridge >= 1e-4) throw SingularGramError("Gram matrix not positive definite");
    ridge = ridge == 0.0 ? 1e-8 : ridge * 10.0;
  }
  const Eigen::VectorXd centered =
      model.targets.array() - model.target_mean;
  model.alpha = model.factorization.solve(centered);
  return model;
}

GpPrediction predict(const GpModel& model, const std::vector<Vec2>& queries) {
  if (model.size() == 0) throw SealError("predict on unfitted model");
  const int n = model.size();
  const auto& L = model.factorization.matrixL();

  GpPrediction out;
  out.mean.resize(queries.size());
  out.variance.resize(queries.size());

  Eigen::VectorXd kstar(n);
  for (std::size_t q = 0; q < queries.size(); ++q) {
    for (int i = 0; i < n; ++i) kstar[i] = model.kernel(queries[q], model.inputs[i]);
    out.mean[q] = model.target_mean + kstar.dot(model.alpha);
    Eigen::VectorXd v = L.solve(kstar);
    double var = model.kernel.prior_var() - v.squaredNorm();
    out.variance[q] = std::max(var, 1e-12);
  }
  return out;
}

namespace {

// Spatial bucket index over a point set, Chebyshev radius queries.
class PointBuckets {
 public:
  PointBuckets(const std::vector<Vec2>& pts, double cell) : cell_(cell) {
    for (std::size_t i = 0; i < pts.size(); ++i)
      buckets_[key(pts[i])].push_back(static_cast<int>(i));
    pts_ = &pts;
  }

  template <typename Fn>
  void for_each_within(const Vec2& p, double radius, Fn&& fn) const {
    const int r = static_cast<int>(std::ceil(radius / cell_));
    const auto [bx, by] = key(p);
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        auto it = buckets_.find({bx + dx, by + dy});
        if (it == buckets_.end()) continue;
        for (int idx : it->second) {
          if (distance((*pts_)[idx], p) <= radius) fn(idx);
        }
      }
    }
  }

 private:
  std::pair<int, int> key(const Vec2& p) const {
    return {static_cast<int>(std::floor(p.x / cell_)),
            static_cast<int>(std::floor(p.y / cell_))};
  }
  double cell_;
  std::map<std::pair<int, int>, std::vector<int>> buckets_;
  const std::vector<Vec2>* pts_ = nullptr;
};

}  // namespace

std::vector<std::vector<double>> compute_mixture_weights(
    const std::vector<const GpModel*>& models, const GridDims& dims,
    const std::vector<int>& cell_ids, const std::vector<GpSample>& observations,
    const FuseOptions& opts) {
  const int m = static_cast<int>(models.size());
  const std::size_t nq = cell_ids.size();
  std::vector<std::vector<double>> weights(m, std::vector<double>(nq, 0.0));
  if (m == 0) return weights;
  if (m == 1) {
    std::fill(weights[0].begin(), weights[0].end(), 1.0);
    return weights;
  }

  std::vector<Vec2> centers(nq);
  for (std::size_t q = 0; q < nq; ++q) centers[q] = dims.center(dims.cell(cell_ids[q]));

  // Support mask per model: cell within support_radius of any training input.
  std::vector<std::vector<std::uint8_t>> in_support(m,
                                                    std::vector<std::uint8_t>(nq, 0));
  for (int j = 0; j < m; ++j) {
    PointBuckets idx(models[j]->inputs, opts.support_radius);
    for (std::size_t q = 0; q < nq; ++q) {
      bool found = false;
      idx.for_each_within(centers[q], opts.support_radius,
                          [&](int) { found = true; });
      if (found) in_support[j][q] = 1;
    }
  }

  // Cache per-model log likelihood of every observation once.
  std::vector<Vec2> obs_pos(observations.size());
  for (std::size_t i = 0; i < observations.size(); ++i)
    obs_pos[i] = observations[i].position;
  std::vector<std::vector<double>> obs_loglik(m);
  for (int j = 0; j < m; ++j) {
    GpPrediction pred = predict(*models[j], obs_pos);
    obs_loglik[j].resize(observations.size());
    for (std::size_t i = 0; i < observations.size(); ++i) {
      const double var = pred.variance[i];
      const double d = observations[i].value - pred.mean[i];
      obs_loglik[j][i] = -0.5 * (std::log(2.0 * M_PI * var) + d * d / var);
    }
  }
  PointBuckets obs_idx(obs_pos, std::max(opts.obs_radius, 1e-6));

  std::vector<double> prior(m, 1.0 / m);
  for (int iter = 0; iter < std::max(1, opts.em_iters); ++iter) {
    // E-step per cell in log space.
    for (std::size_t q = 0; q < nq; ++q) {
      std::vector<double> logr(m, -std::numeric_limits<double>::infinity());
      int n_sup = 0;
      for (int j = 0; j < m; ++j)
        if (in_support[j][q]) ++n_sup;
      for (int j = 0; j < m; ++j) {
        // Eq-style initialization: support indicator masks the prior.
        if (n_sup > 0 && !in_support[j][q]) continue;
        double lr = std::log(std::max(prior[j], 1e-300));
        obs_idx.for_each_within(centers[q], opts.obs_radius,
                                [&](int i) { lr += obs_loglik[j][i]; });
        logr[j] = lr;
      }
      const double mx = *std::max_element(logr.begin(), logr.end());
      double total = 0.0;
      if (std::isfinite(mx)) {
        for (int j = 0; j < m; ++j)
          if (std::isfinite(logr[j])) total += std::exp(logr[j] - mx);
      }
      if (total <= 0.0 || !std::isfinite(mx)) {
        for (int j = 0; j < m; ++j) weights[j][q] = 1.0 / m;  // degenerate row
      } else {
        for (int j = 0; j < m; ++j)
          weights[j][q] =
              std::isfinite(logr[j]) ? std::exp(logr[j] - mx) / total : 0.0;
      }
    }
    // M-step: global mixing proportions.
    if (nq > 0) {
      for (int j = 0; j < m; ++j) {
        double s = 0.0;
        for (std::size_t q = 0; q < nq; ++q) s += weights[j][q];
        prior[j] = std::max(s / static_cast<double>(nq), 1e-6);
      }
      const double z = std::accumulate(prior.begin(), prior.end(), 0.0);
      for (double& p : prior) p /= z;
    }
  }
  return weights;
}

FusedField fuse_gps(const GpModel& local, const std::vector<const GpModel*>& received,
                    const GridDims& dims, const std::vector<int>& cell_ids,
                    const std::vector<GpSample>& observations,
                    const FuseOptions& opts) {
  std::vector<const GpModel*> models;
  models.push_back(&local);
  for (const GpModel* r : received)
    if (r != nullptr && r->size() > 0) models.push_back(r);

  FusedField field;
  field.dims = dims;
  field.cell_ids = cell_ids;
  field.prior_var = local.kernel.prior_var();
  field.positions.resize(cell_ids.size());
  for (std::size_t q = 0; q < cell_ids.size(); ++q)
    field.positions[q] = dims.center(dims.cell(cell_ids[q]));

  field.weights = compute_mixture_weights(models, dims, cell_ids, observations, opts);

  const int m = static_cast<int>(models.size());
  std::vector<GpPrediction> preds(m);
  for (int j = 0; j < m; ++j) preds[j] = predict(*models[j], field.positions);

  const std::size_t nq = cell_ids.size();
  field.mean.resize(nq);
  field.variance.resize(nq);
  field.support.assign(nq, 0);

  std::vector<PointBuckets> support_idx;
  support_idx.reserve(m);
  for (int j = 0; j < m; ++j)
    support_idx.emplace_back(models[j]->inputs, opts.support_radius);

  for (std::size_t q = 0; q < nq; ++q) {
    double mu = 0.0;
    for (int j = 0; j < m; ++j) mu += field.weights[j][q] * preds[j].mean[q];
    double var = 0.0;
    for (int j = 0; j < m; ++j) {
      const double dev = preds[j].mean[q] - mu;
      var += field.weights[j][q] * (preds[j].variance[q] + dev * dev);
    }
    field.mean[q] = mu;
    field.variance[q] = var;
    for (int j = 0; j < m && !field.support[q]; ++j) {
      support_idx[j].for_each_within(field.positions[q], opts.support_radius,
                                     [&](int) { field.support[q] = 1; });
    }
  }
  return field;
}

BeliefGrid exploration_grid(const FusedField& field, double theta) {
  BeliefGrid grid = BeliefGrid::unknown(field.dims);
  for (std::size_t q = 0; q < field.cell_ids.size(); ++q) {
    const int id = field.cell_ids[q];
    grid.value[id] = std::clamp(field.mean[q], 0.0, 1.0);
    grid.confidence[id] = field.confidence(q);
    grid.explored[id] =
        (field.support[q] && grid.confidence[id] >= theta) ? 1 : 0;
  }
  return grid;
}

}  // namespace seal
