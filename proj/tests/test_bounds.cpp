#include "support.hpp"

#include "ixbsp/bounds.hpp"
#include "ixbsp/errors.hpp"

#include <doctest.h>

#include <numbers>

using namespace testing;

namespace {

double phi_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

struct Trajectory {
  std::vector<VectorXd> u, z;
};

// Draws a measurement sequence from the belief's own predictive.
Trajectory simulate(const LinearScenario& s, const VectorXd& mean, const MatrixXd& cov, const std::vector<int>& seq,
                    Rng& rng) {
  const auto& mot = std::get<LinearMotion>(s.models.motion.model);
  const auto& meas = std::get<LinearMeas>(s.models.meas.model);
  VectorXd x = mean + cov.llt().matrixL() * randn(mean.size(), rng);
  Trajectory t;
  for (int a : seq) {
    const VectorXd u = s.actions[a].u;
    x = mot.F * x + mot.J * u + mot.noise.llt().matrixL() * randn(x.size(), rng);
    t.u.push_back(u);
    t.z.push_back(meas.H * x + meas.noise.llt().matrixL() * randn(meas.H.rows(), rng));
  }
  return t;
}

std::vector<Kalman> filter(const LinearScenario& s, Kalman k, const Trajectory& t) {
  const auto& mot = std::get<LinearMotion>(s.models.motion.model);
  const auto& meas = std::get<LinearMeas>(s.models.meas.model);
  std::vector<Kalman> out;
  for (std::size_t i = 0; i < t.z.size(); ++i) out.push_back(k = kalman_step(k, t.u[i], t.z[i], mot, meas));
  return out;
}

double reward_of(const BoundedReward& r, const Kalman& k) {
  return r.scale * phi_cdf((r.w.dot(k.mean) - r.offset) / std::sqrt(r.softness * r.softness + r.w.dot(k.cov * r.w)));
}

}  // namespace

TEST_CASE("reward bound arithmetic") {
  const HolderSpec spec{0.5, 1.0};
  CHECK(reward_bound(2.0, spec) == doctest::Approx(std::sqrt(4.0 * std::log(2.0)) * 0.5 * 2.0));
  CHECK(reward_bound(0.0, spec) == 0.0);
  const HolderSpec half{2.0, 0.5};
  CHECK(reward_bound(9.0, half) == doctest::Approx(std::pow(4.0 * std::log(2.0), 0.25) * 2.0 * 3.0));
  CHECK_THROWS_AS(reward_bound(1.0, HolderSpec{1.0, 1.5}), Error);
  CHECK_THROWS_AS(reward_bound(-1.0, spec), Error);
}

TEST_CASE("bounded reward is an expectation of a bounded function") {
  Rng rng(51);
  BoundedReward r{Eigen::Vector2d(1.0, -0.5), 0.3, 1.5, 2.0};
  const VectorXd m = randn(2, rng);
  const MatrixXd S = random_spd(2, rng);
  const MatrixXd L = S.llt().matrixL();
  const int n = 200000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const VectorXd x = m + L * randn(2, rng);
    const double v = r.scale * phi_cdf((r.w.dot(x) - r.offset) / r.softness);
    s1 += v;
    s2 += v * v;
  }
  const double mc = s1 / n, se = std::sqrt((s2 / n - mc * mc) / n);
  CHECK(std::abs(r(m, S) - mc) < 4.0 * se);
}

TEST_CASE("reward Hölder constant verification") {
  const LinearScenario s = LinearScenario::planar_default();
  CHECK(verify_holder(s.reward, s.reward.holder(), VectorXd::Zero(2), 2000, 3));
  CHECK_FALSE(verify_holder(s.reward, HolderSpec{1e-4, 1.0}, VectorXd::Zero(2), 2000, 3));
}

TEST_CASE("exact linear objective matches simulation") {
  const LinearScenario s = LinearScenario::planar_default();
  Rng rng(52);
  const VectorXd m = randn(2, rng);
  const MatrixXd S = random_spd(2, rng);
  for (int q : {0, 4, 8}) {
    const auto seq = s.sequence(q);
    const int n = 40000;
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      double J = 0.0;
      for (const Kalman& k : filter(s, {m, S}, simulate(s, m, S, seq, rng))) J += reward_of(s.reward, k);
      s1 += J;
      s2 += J * J;
    }
    const double mc = s1 / n, se = std::sqrt((s2 / n - mc * mc) / n);
    CHECK(std::abs(linear_objective(s, m, S, seq) - mc) < 4.0 * se);
  }
}

TEST_CASE("expected squared distance matches simulation") {
  const LinearScenario s = LinearScenario::planar_default();
  Rng rng(53);
  BoundProblem p{s, randn(2, rng), randn(2, rng), random_spd(2, rng), random_spd(2, rng), s.sequence(5)};
  const std::vector<double> ed2 = expected_sq_distance(p);
  const int n = 40000;
  std::vector<double> s1(s.steps, 0.0), s2(s.steps, 0.0);
  for (int i = 0; i < n; ++i) {
    const Trajectory t = simulate(s, p.mean_now, p.cov_now, p.seq, rng);
    const auto now = filter(s, {p.mean_now, p.cov_now}, t);
    const auto prev = filter(s, {p.mean_prev, p.cov_prev}, t);
    for (int k = 0; k < s.steps; ++k) {
      const double d2 = 0.5 * kl_oracle(now[k].mean, now[k].cov, prev[k].mean, prev[k].cov) +
                        0.5 * kl_oracle(prev[k].mean, prev[k].cov, now[k].mean, now[k].cov);
      s1[k] += d2;
      s2[k] += d2 * d2;
    }
  }
  for (int k = 0; k < s.steps; ++k) {
    const double mc = s1[k] / n, se = std::sqrt((s2[k] / n - mc * mc) / n);
    CHECK(std::abs(ed2[k] - mc) < 4.0 * se);
  }
}

TEST_CASE("importance sampled centre agrees with direct simulation") {
  const LinearScenario s = LinearScenario::planar_default();
  const ForcedPair fp = forced_pair(2, 1.0, 77);
  BoundProblem p{s, fp.mean_now, fp.mean_prev, fp.cov, fp.cov, s.sequence(3)};
  const BoundReport rep = objective_bound_analytic(p, s.reward.holder(), 1.0, 20000, 5);
  // Direct: E_now[r(b_prev(z))] - E_prev[r(b_prev(z))], both by plain simulation.
  Rng rng(54);
  const int n = 40000;
  double a = 0.0, b = 0.0;
  for (int i = 0; i < n; ++i) {
    for (const Kalman& k : filter(s, {p.mean_prev, p.cov_prev}, simulate(s, p.mean_now, p.cov_now, p.seq, rng)))
      a += reward_of(s.reward, k);
    for (const Kalman& k : filter(s, {p.mean_prev, p.cov_prev}, simulate(s, p.mean_prev, p.cov_prev, p.seq, rng)))
      b += reward_of(s.reward, k);
  }
  CHECK(rep.phi == doctest::Approx((a - b) / n).epsilon(0.02).scale(0.05));
}

TEST_CASE("forced pairs sit at the requested distance") {
  for (double eps : {0.0, 0.5, 2.0, 10.0}) {
    const ForcedPair fp = forced_pair(3, eps, 9);
    CHECK(d_sqrt_j(fp.mean_now, fp.cov, fp.mean_prev, fp.cov) == doctest::Approx(eps).epsilon(1e-10));
  }
}

TEST_CASE("zero distance collapses the bound") {
  const LinearScenario s = LinearScenario::planar_default();
  const ForcedPair fp = forced_pair(2, 0.0, 4);
  BoundProblem p{s, fp.mean_now, fp.mean_prev, fp.cov, fp.cov, s.sequence(2)};
  const BoundReport rep = objective_bound_analytic(p, s.reward.holder(), 0.0);
  CHECK(rep.phi == 0.0);
  CHECK(rep.psi == 0.0);
  CHECK(rep.lower == 0.0);
  CHECK(rep.upper == 0.0);
}

TEST_CASE("sampled bound on paired trees") {
  Rng rng(55);
  const BeliefPtr p0 = slam_prior(rng, 3);
  ScenarioConfig cfg = small_slam_config(3);
  const PlanningTree a = build_tree_xbsp(p0, cfg);
  const HolderSpec spec{1.0, 1.0};
  const auto seq = a.sequence(4);
  const BoundReport same = objective_bound_sampled(a, a, seq, spec);
  CHECK(same.phi == doctest::Approx(0.0).scale(1e-12));
  CHECK(same.psi == 0.0);

  // A shifted root moves every belief; the difference of objectives has to fall inside.
  GaussianBelief shifted = *p0;
  shifted.mean[0] += 0.05;
  const PlanningTree b = build_tree_xbsp(std::make_shared<const GaussianBelief>(shifted), cfg);
  const BoundReport rep = objective_bound_sampled(b, a, seq, spec);
  CHECK(rep.psi > 0.0);
  CHECK(rep.lower <= rep.upper);

  cfg.n_x = 3;
  const PlanningTree c = build_tree_xbsp(p0, cfg);
  CHECK_THROWS_AS(objective_bound_sampled(c, a, seq, spec), Error);
}

TEST_CASE("small forced distance sweep stays inside the bounds") {
  const LinearScenario s = LinearScenario::planar_default();
  for (double eps : {0.0, 1.0, 5.0}) {
    const BoundCheck c = empirical_bound_check(s, s.reward.holder(), eps, 10, 3, false);
    CHECK(c.holder_verified);
    CHECK(c.fraction_within == 1.0);
    CHECK(c.samples.size() == 10u * static_cast<unsigned>(s.sequence_count()));
  }
}
