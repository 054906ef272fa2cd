#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "seal/raoblackwell.hpp"

using namespace seal;

namespace {

// 1xN strip world; hypotheses and evidence land exactly on cell centers.
BeliefGrid strip_map(const std::vector<double>& beliefs) {
  GridDims dims{static_cast<int>(beliefs.size()), 1, 1.0};
  BeliefGrid g = BeliefGrid::unknown(dims);
  g.value = beliefs;
  return g;
}

PoseBelief belief_at_cells(const BeliefGrid& map, const std::vector<int>& cells,
                           const std::vector<double>& weights) {
  PoseBelief b;
  for (std::size_t i = 0; i < cells.size(); ++i)
    b.hypotheses.push_back({map.dims.center({cells[i], 0}), weights[i]});
  return b;
}

}  // namespace

TEST_SUITE_BEGIN("raoblackwell");

TEST_CASE("uniform map and constant likelihood leave the prior unchanged") {
  const BeliefGrid map = strip_map({0.5, 0.5, 0.5, 0.5});
  PoseBelief prior = belief_at_cells(map, {0, 2}, {0.7, 0.3});
  ObservationSet obs;
  obs.cells = {{{0.0, 0.0}, 0.5}, {{1.0, 0.0}, 0.5}};
  RaoBlackwellParams params;
  const PoseBelief post = update_pose_belief(prior, map, obs, params);
  CHECK(post.hypotheses[0].weight == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(post.hypotheses[1].weight == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("matched hypothesis dominates after one update") {
  // hypothesis A sits where evidence 0.9 meets belief 0.9; hypothesis B where
  // the same evidence meets belief 0.1
  const BeliefGrid map = strip_map({0.9, 0.1});
  PoseBelief prior = belief_at_cells(map, {0, 1}, {0.5, 0.5});
  ObservationSet obs;
  obs.cells = {{{0.0, 0.0}, 0.9}};
  RaoBlackwellParams params;  // sigma 0.2
  const PoseBelief post = update_pose_belief(prior, map, obs, params);
  CHECK(post.hypotheses[0].weight > 0.8);
  // hand computation: w_A = N(0; 0.2) * 0.9, w_B = N(0.8; 0.2) * 0.1
  const double na = std::exp(0.0) * 0.9;
  const double nb = std::exp(-0.5 * 16.0) * 0.1;
  CHECK(post.hypotheses[0].weight == doctest::Approx(na / (na + nb)).epsilon(1e-9));
}

TEST_CASE("repeated identical updates concentrate weight monotonically") {
  const BeliefGrid map = strip_map({0.9, 0.1});
  PoseBelief belief = belief_at_cells(map, {0, 1}, {0.5, 0.5});
  ObservationSet obs;
  obs.cells = {{{0.0, 0.0}, 0.9}};
  RaoBlackwellParams params;
  double last = 0.5;
  for (int i = 0; i < 6; ++i) {
    belief = update_pose_belief(belief, map, obs, params);
    const double w = belief.hypotheses[0].weight;
    // strictly increasing until it saturates at 1 in double precision
    CHECK((w > last || w == 1.0));
    CHECK(w >= last);
    last = w;
  }
  CHECK(last > 0.999);
}

TEST_CASE("sample weights expose the raw integrand mass") {
  const BeliefGrid map = strip_map({0.9, 0.1, 0.5});
  PoseBelief prior = belief_at_cells(map, {0, 1}, {0.25, 0.75});
  ObservationSet obs;
  obs.cells = {{{0.0, 0.0}, 0.7}, {{1.0, 0.0}, 0.2}};
  RaoBlackwellParams params;
  const std::vector<double> mass = sample_weights(prior, map, obs, params);
  const PoseBelief post = update_pose_belief(prior, map, obs, params);

  // posterior / prior is proportional to the mass, elementwise (psi scales)
  const double r0 = post.hypotheses[0].weight / prior.hypotheses[0].weight;
  const double r1 = post.hypotheses[1].weight / prior.hypotheses[1].weight;
  CHECK(r0 / r1 == doctest::Approx(mass[0] / mass[1]).epsilon(1e-9));
  // psi equals the pre-normalization mass
  CHECK(post.psi ==
        doctest::Approx(0.25 * mass[0] + 0.75 * mass[1]).epsilon(1e-12));
}

TEST_CASE("zero likelihood everywhere falls back to uniform") {
  const BeliefGrid map = strip_map({0.0, 0.0});  // b = 0 kills every term
  PoseBelief prior = belief_at_cells(map, {0, 1}, {0.9, 0.1});
  ObservationSet obs;
  obs.cells = {{{0.0, 0.0}, 1.0}};
  RaoBlackwellParams params;
  const std::vector<double> mass = sample_weights(prior, map, obs, params);
  CHECK(mass[0] == doctest::Approx(0.5));
  CHECK(mass[1] == doctest::Approx(0.5));
  const PoseBelief post = update_pose_belief(prior, map, obs, params);
  CHECK(post.degenerate);
  CHECK(post.hypotheses[0].weight == doctest::Approx(0.5));
}

TEST_CASE("single hypothesis keeps weight one") {
  const BeliefGrid map = strip_map({0.4});
  PoseBelief prior = belief_at_cells(map, {0}, {1.0});
  ObservationSet obs;
  obs.cells = {{{0.0, 0.0}, 0.6}};
  const PoseBelief post = update_pose_belief(prior, map, obs, {});
  CHECK(post.hypotheses[0].weight == doctest::Approx(1.0));
}

TEST_CASE("entropy identities") {
  PoseBelief b;
  SUBCASE("uniform over four is log 4") {
    for (int i = 0; i < 4; ++i) b.hypotheses.push_back({{0, 0}, 0.25});
    CHECK(pose_entropy(b) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    CHECK(pose_entropy(b) == doctest::Approx(1.3862943611198906).epsilon(1e-12));
  }
  SUBCASE("point mass is exactly zero") {
    b.hypotheses = {{{0, 0}, 1.0}, {{1, 0}, 0.0}, {{2, 0}, 0.0}};
    CHECK(pose_entropy(b) == 0.0);
  }
  SUBCASE("0.5/0.25/0.25 evaluates to 1.0397 nats") {
    b.hypotheses = {{{0, 0}, 0.5}, {{1, 0}, 0.25}, {{2, 0}, 0.25}};
    CHECK(pose_entropy(b) == doctest::Approx(1.0397207708399179).epsilon(1e-12));
  }
  SUBCASE("bounds hold for arbitrary weights") {
    b.hypotheses = {{{0, 0}, 0.6}, {{1, 0}, 0.3}, {{2, 0}, 0.1}};
    const double h = pose_entropy(b);
    CHECK(h >= 0.0);
    CHECK(h <= std::log(3.0) + 1e-15);
    CHECK(h > 0.0);  // zero only for a point mass
  }
}

TEST_CASE("map update applies full confidence at zero entropy") {
  const BeliefGrid map = strip_map({0.5, 0.5});
  PoseBelief b = belief_at_cells(map, {0}, {1.0});  // point mass, H = 0
  ObservationSet obs;
  obs.cells = {{{0.0, 0.0}, 1.0}};
  RaoBlackwellParams params;  // map_rate 1
  const BeliefGrid out = update_map_belief(map, b, obs, params);
  CHECK(out.value[0] == doctest::Approx(1.0));  // moved all the way
  CHECK(out.value[1] == doctest::Approx(0.5));  // untouched
}

TEST_CASE("uniform weights attenuate the rate by 1/e") {
  const BeliefGrid map = strip_map({0.5, 0.5, 0.5, 0.5});
  PoseBelief b;
  for (int i = 0; i < 4; ++i) b.hypotheses.push_back({map.dims.center({0, 0}), 0.25});
  ObservationSet obs;
  obs.cells = {{{0.0, 0.0}, 1.0}};
  RaoBlackwellParams params;
  const BeliefGrid out = update_map_belief(map, b, obs, params);
  // H = log 4 so the attenuation factor is exactly e^-1; all four hypotheses
  // agree on the same cell so delta = 0.5
  CHECK(out.value[0] == doctest::Approx(0.5 + std::exp(-1.0) * 0.5).epsilon(1e-12));
}

TEST_CASE("no observations leave the map unchanged") {
  const BeliefGrid map = strip_map({0.3, 0.8});
  PoseBelief b = belief_at_cells(map, {0}, {1.0});
  const BeliefGrid out = update_map_belief(map, b, {}, {});
  CHECK(out.value == map.value);
}

TEST_CASE("map values stay inside [0,1] under hostile updates") {
  BeliefGrid map = strip_map({0.01, 0.99, 0.5});
  PoseBelief b = belief_at_cells(map, {0, 1}, {0.5, 0.5});
  ObservationSet obs;
  obs.cells = {{{0.0, 0.0}, 1.0}, {{1.0, 0.0}, 0.0}, {{2.0, 0.0}, 1.0}};
  RaoBlackwellParams params;
  for (int i = 0; i < 50; ++i) {
    map = update_map_belief(map, b, obs, params);
    for (double v : map.value) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("higher entropy never increases the belief change") {
  const BeliefGrid map = strip_map({0.5, 0.5});
  ObservationSet obs;
  obs.cells = {{{0.0, 0.0}, 1.0}};
  RaoBlackwellParams params;

  // same MAP hypothesis, increasingly uncertain weight spread
  double last_change = 1.0;
  for (double spread : {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}) {
    PoseBelief b;
    b.hypotheses.push_back({map.dims.center({0, 0}), 1.0 - spread});
    b.hypotheses.push_back({map.dims.center({0, 0}), spread});
    const BeliefGrid out = update_map_belief(map, b, obs, params);
    const double change = std::abs(out.value[0] - map.value[0]);
    CHECK(change <= last_change + 1e-12);
    last_change = change;
  }
}

TEST_CASE("joint update matches the exhaustive joint-Bayes oracle") {
  // 4 cells, 2 hypotheses at cells 0 and 1, shared evidence offsets {0,1,2}:
  // hypothesis 0 observes cells {0,1,2}, hypothesis 1 observes cells {1,2,3}
  const std::vector<double> map_belief = {0.8, 0.3, 0.55, 0.65};
  const std::vector<double> prior = {0.6, 0.4};
  const BeliefGrid map = strip_map(map_belief);

  JointBelief joint;
  joint.map = map;
  joint.pose = belief_at_cells(map, {0, 1}, prior);

  ObservationSet obs;
  obs.cells = {{{0.0, 0.0}, 0.75}, {{1.0, 0.0}, 0.4}, {{2.0, 0.0}, 0.6}};

  RaoBlackwellParams params;
  params.likelihood_sigma = 0.2;
  params.map_rate = 1.0;
  const JointBelief post = joint_update(joint, obs, params);

  // the oracle enumerates the full (hypothesis x 2^4 map configs) joint
  const std::vector<std::vector<double>> evidence = {{0.75, 0.4, 0.6, -1.0},
                                                     {-1.0, 0.75, 0.4, 0.6}};
  const oracles::JointOracleResult oracle = oracles::brute_force_joint_update(
      prior, map_belief, evidence, params.likelihood_sigma, params.map_rate);

  for (int j = 0; j < 2; ++j)
    CHECK(post.pose.hypotheses[j].weight ==
          doctest::Approx(oracle.pose_posterior[j]).epsilon(1e-6));
  for (int c = 0; c < 4; ++c)
    CHECK(post.map.value[c] == doctest::Approx(oracle.map_posterior[c]).epsilon(1e-6));
}

TEST_CASE("joint update with distinct hypothesis cells matches the oracle") {
  // 4 cells, 3 hypotheses at cells 0,1,2; one shared evidence offset per
  // hypothesis (its own cell), padded so all see in-bounds cells
  const std::vector<double> map_belief = {0.7, 0.25, 0.5, 0.6};
  const std::vector<double> prior = {0.5, 0.3, 0.2};
  const BeliefGrid map = strip_map(map_belief);

  JointBelief joint;
  joint.map = map;
  joint.pose = belief_at_cells(map, {0, 1, 2}, prior);

  ObservationSet obs;
  obs.cells = {{{0.0, 0.0}, 0.65}, {{1.0, 0.0}, 0.45}};

  RaoBlackwellParams params;
  const JointBelief post = joint_update(joint, obs, params);

  // oracle evidence table: hypothesis j observes cells j and j+1
  // (offsets 0 and +1), with values 0.65 and 0.45
  const int nc = 4, nj = 3;
  std::vector<std::vector<double>> evidence(nj, std::vector<double>(nc, -1.0));
  std::vector<double> pose_unnorm(nj, 0.0);
  auto pdf = [&](double d) {
    return std::exp(-0.5 * d * d / (0.2 * 0.2)) / (0.2 * std::sqrt(2.0 * M_PI));
  };
  for (int j = 0; j < nj; ++j) {
    evidence[j][j] = 0.65;
    evidence[j][j + 1] = 0.45;
    double mass = 0.0;
    for (int c = 0; c < nc; ++c) {
      if (evidence[j][c] < 0.0) continue;
      mass += pdf(evidence[j][c] - map_belief[c]) * map_belief[c];
    }
    pose_unnorm[j] = prior[j] * mass;
  }
  double z = 0.0;
  for (double v : pose_unnorm) z += v;
  double h = 0.0;
  for (double v : pose_unnorm)
    if (v > 0.0) h -= (v / z) * std::log(v / z);
  const double rate = std::exp(-h / std::log(3.0));
  for (int j = 0; j < nj; ++j)
    CHECK(post.pose.hypotheses[j].weight ==
          doctest::Approx(pose_unnorm[j] / z).epsilon(1e-9));
  for (int c = 0; c < nc; ++c) {
    double delta = 0.0;
    for (int j = 0; j < nj; ++j) {
      if (evidence[j][c] < 0.0) continue;
      delta += (pose_unnorm[j] / z) * (evidence[j][c] - map_belief[c]);
    }
    CHECK(post.map.value[c] ==
          doctest::Approx(map_belief[c] + rate * delta).epsilon(1e-9));
  }
}

TEST_CASE("uninformative observations leave the joint belief unchanged") {
  const BeliefGrid map = strip_map({0.5, 0.5, 0.5});
  JointBelief joint;
  joint.map = map;
  joint.pose = belief_at_cells(map, {0, 1}, {0.55, 0.45});
  ObservationSet obs;
  obs.cells = {{{0.0, 0.0}, 0.5}};
  const JointBelief post = joint_update(joint, obs, {});
  CHECK(post.pose.hypotheses[0].weight == doctest::Approx(0.55).epsilon(1e-12));
  for (int c = 0; c < 3; ++c)
    CHECK(post.map.value[c] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("joint update is deterministic") {
  const BeliefGrid map = strip_map({0.8, 0.2, 0.6});
  JointBelief joint;
  joint.map = map;
  joint.pose = belief_at_cells(map, {0, 1}, {0.5, 0.5});
  ObservationSet obs;
  obs.cells = {{{0.0, 0.0}, 0.9}, {{1.0, 0.0}, 0.1}};
  const JointBelief a = joint_update(joint, obs, {});
  const JointBelief b = joint_update(joint, obs, {});
  CHECK(a.pose.hypotheses[0].weight == b.pose.hypotheses[0].weight);
  CHECK(a.map.value == b.map.value);
}

TEST_CASE("weights normalize after every update") {
  const BeliefGrid map = strip_map({0.8, 0.2, 0.6, 0.4});
  PoseBelief belief = belief_at_cells(map, {0, 1, 2}, {0.2, 0.5, 0.3});
  ObservationSet obs;
  obs.cells = {{{0.0, 0.0}, 0.7}};
  for (int i = 0; i < 10; ++i) {
    belief = update_pose_belief(belief, map, obs, {});
    double total = 0.0;
    for (const auto& h : belief.hypotheses) total += h.weight;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_SUITE_END();
