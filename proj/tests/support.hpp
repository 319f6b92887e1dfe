#pragma once

#include "ixbsp/belief.hpp"
#include "ixbsp/config.hpp"
#include "ixbsp/sampling.hpp"

#include <cmath>
#include <random>

namespace testing {

using namespace ixbsp;

inline VectorXd randn(int n, Rng& rng, double s = 1.0) {
  std::normal_distribution<double> n01;
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = s * n01(rng);
  return v;
}

inline MatrixXd random_spd(int n, Rng& rng, double floor = 0.2) {
  MatrixXd A(n, n);
  std::normal_distribution<double> n01;
  for (int i = 0; i < A.size(); ++i) A.data()[i] = n01(rng);
  return A * A.transpose() / n + floor * MatrixXd::Identity(n, n);
}

inline GaussianBelief state_belief(const VectorXd& mean, const MatrixXd& cov, int t = 0) {
  return GaussianBelief::from_covariance({VariableId::state(t, static_cast<int>(mean.size()))}, mean, cov, {t, t});
}

inline Models linear_models(int d, int m, Rng& rng) {
  LinearMotion mot;
  mot.F = MatrixXd::Identity(d, d) + 0.1 * randn(d * d, rng).reshaped(d, d);
  mot.J = MatrixXd::Identity(d, d);
  mot.noise = random_spd(d, rng, 0.1);
  LinearMeas meas;
  meas.H = randn(m * d, rng).reshaped(m, d);
  meas.noise = random_spd(m, rng, 0.1);
  return {MotionModel{mot}, MeasModel{meas}};
}

inline ActionId control(const VectorXd& u, int index = 0) {
  ActionId a;
  a.primitive = Primitive::Control;
  a.u = u;
  a.index = index;
  return a;
}

// Plain Kalman predict + update on the current state only.
struct Kalman {
  VectorXd mean;
  MatrixXd cov;
};

inline Kalman kalman_step(const Kalman& k, const VectorXd& u, const VectorXd& z, const LinearMotion& mot,
                          const LinearMeas& meas) {
  const VectorXd mp = mot.F * k.mean + mot.J * u;
  const MatrixXd Pp = mot.F * k.cov * mot.F.transpose() + mot.noise;
  const MatrixXd S = meas.H * Pp * meas.H.transpose() + meas.noise;
  const MatrixXd K = Pp * meas.H.transpose() * S.inverse();
  Kalman out;
  out.mean = mp + K * (z - meas.H * mp);
  out.cov = (MatrixXd::Identity(mp.size(), mp.size()) - K * meas.H) * Pp;
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

// Brute force Gaussian KL, written from the textbook formula.
inline double kl_oracle(const VectorXd& m1, const MatrixXd& S1, const VectorXd& m2, const MatrixXd& S2) {
  const MatrixXd S2i = S2.inverse();
  const VectorXd d = m2 - m1;
  const double k = double(m1.size());
  return 0.5 * ((S2i * S1).trace() + d.dot(S2i * d) - k + std::log(S2.determinant() / S1.determinant()));
}

// Small planar SLAM scenario: pose at the origin facing +x with landmarks ahead.
inline ScenarioConfig small_slam_config(std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.n_x = 2;
  cfg.n_z = 1;
  cfg.L = 2;
  cfg.seed = seed;
  cfg.reward.goal = Eigen::Vector2d(8.0, 2.0);
  return cfg;
}

inline BeliefPtr slam_prior(Rng& rng, int n_landmarks) {
  std::vector<VariableId> index{VariableId::pose(0)};
  VectorXd mean = VectorXd::Zero(3 + 2 * n_landmarks);
  std::uniform_real_distribution<double> ux(4.0, 12.0), uy(-3.0, 3.0);
  for (int i = 0; i < n_landmarks; ++i) {
    index.push_back(VariableId::landmark(i));
    mean.segment(3 + 2 * i, 2) = Eigen::Vector2d(ux(rng), uy(rng));
  }
  MatrixXd cov = MatrixXd::Identity(mean.size(), mean.size());
  cov.topLeftCorner(3, 3) = Eigen::Vector3d(0.3, 0.3, 0.02).cwiseAbs2().asDiagonal();
  for (int i = 0; i < n_landmarks; ++i) cov.block(3 + 2 * i, 3 + 2 * i, 2, 2) *= 0.25;
  return std::make_shared<const GaussianBelief>(GaussianBelief::from_covariance(index, mean, cov, {0, 0}));
}

// One executed step: the realised measurement is drawn from the propagated belief,
// then the past pose is marginalised out.
inline BeliefPtr advance(const BeliefPtr& post, const ActionId& a, const Models& models, Rng& rng) {
  const PropagatedBelief p = propagate(rebase(post), a, models.motion);
  const StateSample chi = sample_state(p, rng);
  const DataAssociation da = predicted_da(chi, models.meas);
  const GaussianBelief upd = update_with_measurements(p, sample_measurement(chi, da, models.meas, rng), da, models);
  std::vector<VariableId> keep;
  for (const auto& v : upd.index)
    if (!v.is_robot() || v == upd.robot_var()) keep.push_back(v);
  GaussianBelief f = marginal(upd, keep);
  f.label = {upd.robot_var().key, upd.robot_var().key};
  return std::make_shared<const GaussianBelief>(std::move(f));
}

}  // namespace testing
