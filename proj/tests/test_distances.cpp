#include "support.hpp"

#include "ixbsp/distances.hpp"
#include "ixbsp/errors.hpp"

#include <doctest.h>

using namespace testing;

TEST_CASE("kl of identical beliefs is zero") {
  Rng rng(1);
  const GaussianBelief b = state_belief(randn(4, rng), random_spd(4, rng));
  CHECK(kl_gaussian(b, b) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(d_sqrt_j(b, b) == 0.0);
}

TEST_CASE("kl matches the textbook formula") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + trial % 6;
    const VectorXd m1 = randn(d, rng), m2 = randn(d, rng);
    const MatrixXd S1 = random_spd(d, rng), S2 = random_spd(d, rng);
    const double got = kl_gaussian(state_belief(m1, S1), state_belief(m2, S2));
    CHECK(got == doctest::Approx(kl_oracle(m1, S1, m2, S2)).epsilon(1e-9));
  }
}

TEST_CASE("sqrtj is the root of half the symmetric kl") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + trial % 20;
    const VectorXd m1 = randn(d, rng), m2 = randn(d, rng);
    const MatrixXd S1 = random_spd(d, rng), S2 = random_spd(d, rng);
    const double sym = 0.5 * kl_oracle(m1, S1, m2, S2) + 0.5 * kl_oracle(m2, S2, m1, S1);
    const double D = d_sqrt_j(state_belief(m1, S1), state_belief(m2, S2));
    CHECK(D * D == doctest::Approx(sym).epsilon(1e-9));
    CHECK(D == doctest::Approx(d_sqrt_j(state_belief(m2, S2), state_belief(m1, S1))).epsilon(1e-12));
  }
}

TEST_CASE("sqrtj for shifted means with shared covariance") {
  // D^2 = delta' S^-1 delta / 2 when covariances agree.
  const MatrixXd S = Eigen::Vector2d(4.0, 1.0).asDiagonal();
  const double D = d_sqrt_j(state_belief(Eigen::Vector2d(0, 0), S), state_belief(Eigen::Vector2d(2, 1), S));
  CHECK(D == doctest::Approx(std::sqrt((1.0 + 1.0) / 2.0)));
}

TEST_CASE("sqrtj aligns beliefs over shared variables") {
  const GaussianBelief a = GaussianBelief::from_covariance(
      {VariableId::pose(0), VariableId::landmark(3)}, VectorXd::LinSpaced(5, 0, 4), MatrixXd::Identity(5, 5));
  const GaussianBelief b = GaussianBelief::from_covariance({VariableId::landmark(3), VariableId::pose(0)},
                                                           (VectorXd(5) << 3, 4, 0, 1, 2).finished(),
                                                           MatrixXd::Identity(5, 5));
  CHECK(d_sqrt_j(a, b) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("incremental delta reproduces the distance change after linear propagation") {
  Rng rng(4);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = 1 + trial % 3, m = 1 + trial % 2;
    const Models models = linear_models(d, m, rng);
    const MatrixXd S = random_spd(d, rng);
    const GaussianBelief b1 = state_belief(randn(d, rng), S);
    const GaussianBelief b2 = state_belief(randn(d, rng), random_spd(d, rng));
    const ActionId a = control(randn(d, rng));
    const VectorXd z = randn(m, rng);
    const DataAssociation da{{{1, kDirect}}};
    const GaussianBelief p1 = update_with_measurements(propagate(b1, a, models.motion), {{kDirect, z}}, da, models);
    const GaussianBelief p2 = update_with_measurements(propagate(b2, a, models.motion), {{kDirect, z}}, da, models);
    const double before = d_sqrt_j(b1, b2), after = d_sqrt_j(p1, p2);
    const double delta = incremental_delta(b1, b2, make_propagation_spec(b1, p1), make_propagation_spec(b2, p2));
    CHECK(std::abs(after * after - before * before - delta) < 1e-9);
  }
}

TEST_CASE("da key orders by association size first") {
  auto with = [](std::set<DaEntry> e) {
    GaussianBelief b = state_belief(VectorXd::Zero(1), MatrixXd::Identity(1, 1));
    Step s;
    s.time = 1;
    s.measured = true;
    s.da.entries = std::move(e);
    for (const auto& [t, id] : s.da.entries) s.z[id] = VectorXd::Zero(2);
    b.history.steps.push_back(s);
    return b;
  };
  const GaussianBelief a = with({{1, 0}, {1, 1}});
  const GaussianBelief same = with({{1, 0}, {1, 1}});
  const GaussianBelief one_off = with({{1, 0}});
  const GaussianBelief two_off = with({{1, 2}, {1, 3}});
  CHECK(d_da(a, same).count == 0);
  CHECK(d_da(a, one_off) < d_da(a, two_off));
}

TEST_CASE("quadratic form moments") {
  SUBCASE("scalar chi square") {
    // x ~ N(0, 1): E[x^2] = 1, Var = 2.
    const QuadMoments q = gaussian_quadratic_moments(MatrixXd::Ones(1, 1), VectorXd::Zero(1), 0.0,
                                                     VectorXd::Zero(1), MatrixXd::Ones(1, 1));
    CHECK(q.mean == doctest::Approx(1.0));
    CHECK(q.variance == doctest::Approx(2.0));
  }
  SUBCASE("against sampling") {
    Rng rng(5);
    const int d = 3;
    const MatrixXd C = random_spd(d, rng) - 0.5 * MatrixXd::Identity(d, d);
    const VectorXd c = randn(d, rng), mu = randn(d, rng);
    const MatrixXd Sig = random_spd(d, rng);
    const double y = 0.7;
    const QuadMoments q = gaussian_quadratic_moments(C, c, y, mu, Sig);
    const MatrixXd L = Sig.llt().matrixL();
    const int n = 200000;
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const VectorXd x = mu + L * randn(d, rng);
      const double v = x.dot(C * x) + c.dot(x) + y;
      s1 += v;
      s2 += v * v;
    }
    const double m = s1 / n, var = s2 / n - m * m;
    CHECK(std::abs(q.mean - m) < 4.0 * std::sqrt(var / n));
    CHECK(q.variance == doctest::Approx(var).epsilon(0.03));
  }
}

TEST_CASE("chi square conditions") {
  const MatrixXd I = MatrixXd::Identity(2, 2);
  CHECK(check_chi_squared_conditions(I, VectorXd::Zero(2), 0.0, I));
  CHECK_FALSE(check_chi_squared_conditions(I, VectorXd::Ones(2), 0.0, I));
}
