#include "support.hpp"

#include "ixbsp/errors.hpp"

#include <doctest.h>

using namespace testing;

TEST_CASE("linear propagate and update agree with a Kalman filter") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 1 + trial % 3, m = 1 + trial % 2;
    const Models models = linear_models(d, m, rng);
    const auto& mot = std::get<LinearMotion>(models.motion.model);
    const auto& meas = std::get<LinearMeas>(models.meas.model);
    Kalman k{randn(d, rng), random_spd(d, rng)};
    auto b = std::make_shared<const GaussianBelief>(state_belief(k.mean, k.cov));
    for (int t = 1; t <= 3; ++t) {
      const VectorXd u = randn(d, rng), z = randn(m, rng);
      k = kalman_step(k, u, z, mot, meas);
      const DataAssociation da{{{t, kDirect}}};
      b = std::make_shared<const GaussianBelief>(
          update_with_measurements(propagate(*b, control(u), models.motion), {{kDirect, z}}, da, models));
      CHECK((b->robot_mean() - k.mean).norm() < 1e-8);
      CHECK((b->robot_cov() - k.cov).norm() < 1e-8);
    }
  }
}

TEST_CASE("propagation keeps the past state and adds a new one") {
  Rng rng(12);
  const Models models = linear_models(2, 1, rng);
  const GaussianBelief b = state_belief(randn(2, rng), random_spd(2, rng));
  const PropagatedBelief p = propagate(b, control(randn(2, rng)), models.motion);
  CHECK(p.dim() == 4);
  CHECK(p.robot_var().key == 1);
  // The old state marginal is untouched by motion alone.
  const GaussianBelief old = marginal(p, {VariableId::state(0, 2)});
  CHECK((old.mean - b.mean).norm() < 1e-10);
  CHECK((old.cov - b.cov).norm() < 1e-10);
}

TEST_CASE("marginal picks the requested blocks") {
  Rng rng(13);
  const MatrixXd S = random_spd(7, rng);
  const VectorXd m = randn(7, rng);
  const GaussianBelief b = GaussianBelief::from_covariance(
      {VariableId::pose(0), VariableId::landmark(2), VariableId::landmark(5)}, m, S);
  const GaussianBelief lm = marginal(b, {VariableId::landmark(5)});
  CHECK(lm.mean == m.tail(2));
  CHECK(lm.cov == S.bottomRightCorner(2, 2));
  CHECK_THROWS_AS(marginal(b, {VariableId::landmark(9)}), Error);
}

TEST_CASE("validation rejects malformed beliefs") {
  GaussianBelief b;
  b.index = {VariableId::state(0, 2)};
  b.mean = VectorXd::Zero(2);
  b.cov = (MatrixXd(2, 2) << 1, 2, 2, 1).finished();
  CHECK_THROWS_AS(validate(b), Error);
  b.cov = MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS(validate(b), Error);
}

TEST_CASE("incremental update equals solving the target history from scratch") {
  Rng rng(14);
  const Models models = ScenarioConfig::default_models();
  const BeliefPtr prior = slam_prior(rng, 3);
  const ActionId fwd = default_primitives()[0];

  // Reused belief: one step with some measurement.
  PropagatedBelief p = propagate(rebase(prior), fwd, models.motion);
  StateSample chi = sample_state(p, rng);
  DataAssociation da = predicted_da(chi, models.meas);
  REQUIRE_FALSE(da.entries.empty());
  const GaussianBelief reused = update_with_measurements(p, sample_measurement(chi, da, models.meas, rng), da, models);

  // Target: same anchor, different measurement values.
  const MeasurementSet z2 = sample_measurement(chi, da, models.meas, rng);
  const GaussianBelief target = update_with_measurements(p, z2, da, models);
  FactorStats stats;
  const GaussianBelief inc = incremental_update(reused, target.history, models, &stats);
  const GaussianBelief scratch = solve_history(target.history, models);
  CHECK((inc.mean - scratch.mean).norm() < 1e-8);
  CHECK((inc.cov - scratch.cov).norm() < 1e-8);
  CHECK(stats.existing >= stats.reused);
  CHECK(stats.revalued == static_cast<int>(da.entries.size()));
}

TEST_CASE("incremental update refuses an unrelated history") {
  Rng rng(15);
  const Models models = ScenarioConfig::default_models();
  const BeliefPtr a = slam_prior(rng, 2);
  const BeliefPtr b = slam_prior(rng, 2);
  const GaussianBelief ra = propagate(rebase(a), default_primitives()[0], models.motion);
  const GaussianBelief rb = propagate(rebase(b), default_primitives()[0], models.motion);
  CHECK_THROWS_AS(incremental_update(ra, rb.history, models), Error);
}
