#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <vector>

#include "seal/geometry.hpp"

namespace seal {

struct Kernel {
  double lengthscale = 1.0;
  double signal_var = 1.0;
  double noise_var = 0.1;

  double operator()(const Vec2& a, const Vec2& b) const {
    const double d2 = squared_norm(a - b);
    return signal_var * std::exp(-d2 / (2.0 * lengthscale * lengthscale));
  }
  // Upper bound on the predictive variance of an observation.
  double prior_var() const { return signal_var + noise_var; }
};

struct GpSample {
  Vec2 position;
  double value = 0.0;
};

// Exact GP regressor with a zero mean function applied after centering the
// targets on their empirical mean. The Cholesky factor of K + noise*I is
// cached at fit time.
struct GpModel {
  std::vector<Vec2> inputs;
  Eigen::VectorXd targets;     // raw observed values
  Kernel kernel;
  double target_mean = 0.0;
  Eigen::LLT<Eigen::MatrixXd> factorization;
  Eigen::VectorXd alpha;       // (K + noise*I)^-1 (y - mean)

  int size() const { return static_cast<int>(inputs.size()); }
};

struct GpPrediction {
  std::vector<double> mean;
  std::vector<double> variance;  // includes observation noise
};

// Fits the model; duplicate positions are deterministically jittered by 1e-6 m
// and the ridge escalates to 1e-4 before SingularGramError is thrown.
GpModel fit_gp(const std::vector<GpSample>& samples, const Kernel& kernel);

GpPrediction predict(const GpModel& model, const std::vector<Vec2>& queries);

// Per-cell mixture of several robots' GP posteriors over a common query set.
struct FusedField {
  GridDims dims;
  std::vector<int> cell_ids;                  // flat indices into dims
  std::vector<Vec2> positions;                // query positions (cell centers)
  std::vector<std::vector<double>> weights;   // [model][query], rows sum to 1
  std::vector<double> mean;
  std::vector<double> variance;
  std::vector<std::uint8_t> support;          // any model covers the cell
  double prior_var = 1.1;

  // Exploration confidence: normalized variance reduction, in [0, 1].
  double confidence(std::size_t q) const {
    double c = 1.0 - variance[q] / prior_var;
    return c < 0.0 ? 0.0 : (c > 1.0 ? 1.0 : c);
  }
};

struct FuseOptions {
  int em_iters = 5;
  double support_radius = 1.25;   // meters; a model covers cells near its inputs
  double obs_radius = 1.0;        // meters; observations tied to nearby cells
};

// EM weight distribution over component models, evaluated per query cell.
// `observations` are the local robot's raw samples; cells with no nearby
// observation keep their prior (support-masked uniform) weights.
std::vector<std::vector<double>> compute_mixture_weights(
    const std::vector<const GpModel*>& models, const GridDims& dims,
    const std::vector<int>& cell_ids, const std::vector<GpSample>& observations,
    const FuseOptions& opts);

// Mixture moments: mean' = sum_j b_j mu_j,
// var' = sum_j b_j (var_j + (mu_j - mean')^2).
FusedField fuse_gps(const GpModel& local, const std::vector<const GpModel*>& received,
                    const GridDims& dims, const std::vector<int>& cell_ids,
                    const std::vector<GpSample>& observations,
                    const FuseOptions& opts = {});

// Per-cell exploration belief grid. `value` is the occupancy belief in [0,1]
// (0.5 = unknown) and `confidence` the exploration belief thresholded by
// exploration_grid; `explored` is the provenance flag.
struct BeliefGrid {
  GridDims dims;
  std::vector<double> value;
  std::vector<double> confidence;
  std::vector<std::uint8_t> explored;

  static BeliefGrid unknown(const GridDims& d) {
    BeliefGrid g;
    g.dims = d;
    g.value.assign(d.size(), 0.5);
    g.confidence.assign(d.size(), 0.0);
    g.explored.assign(d.size(), 0);
    return g;
  }
};

// Thresholds the fused field: a covered cell is explored when it lies in the
// GP support and its confidence is >= theta. Occupancy belief is copied from
// the fused mean clamped into [0,1].
BeliefGrid exploration_grid(const FusedField& field, double theta);

}  // namespace seal
