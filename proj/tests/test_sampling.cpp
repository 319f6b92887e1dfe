#include "support.hpp"

#include "ixbsp/errors.hpp"
#include "ixbsp/incremental.hpp"

#include <doctest.h>

#include <numbers>

using namespace testing;

namespace {

double log_normal_oracle(const VectorXd& x, const VectorXd& m, const MatrixXd& S) {
  const VectorXd r = x - m;
  const double k = double(x.size());
  return -0.5 * (r.dot(S.inverse() * r) + std::log(S.determinant()) + k * std::log(2.0 * std::numbers::pi));
}

// Discrete toy: nominal p, one archived generator q, sample counts n0 and n1.
struct Toy {
  std::vector<double> p{0.1, 0.2, 0.3, 0.4};
  std::vector<double> q{0.4, 0.3, 0.2, 0.1};
  std::vector<double> f{1.0, -2.0, 0.5, 3.0};
};

MisRecord toy_record(const Toy& toy, const std::vector<int>& from_p, const std::vector<int>& from_q) {
  MisRecord rec;
  rec.n = {static_cast<int>(from_p.size()), static_cast<int>(from_q.size())};
  rec.nominal = {true, false};
  int path = 0;
  for (int m = 0; m < 2; ++m)
    for (int z : m == 0 ? from_p : from_q)
      rec.entries.push_back({path++, m, std::log(toy.p[z]), {std::log(toy.p[z]), std::log(toy.q[z])}});
  return rec;
}

}  // namespace

TEST_CASE("stream seeds depend on the whole path") {
  CHECK(stream_seed(1, {0, 1}) == stream_seed(1, {0, 1}));
  CHECK(stream_seed(1, {0, 1}) != stream_seed(1, {1, 0}));
  CHECK(stream_seed(1, {0}) != stream_seed(2, {0}));
}

TEST_CASE("future measurement sampling shape") {
  Rng rng(21);
  const Models models = linear_models(2, 2, rng);
  const PropagatedBelief p = propagate(state_belief(randn(2, rng), random_spd(2, rng)), control(randn(2, rng)),
                                       models.motion);
  const auto samples = sample_future_measurements(p, models.meas, 3, 2, rng);
  REQUIRE(samples.size() == 6);
  // n_z measurements share each drawn state.
  CHECK(samples[0].state.chi == samples[1].state.chi);
  CHECK(samples[1].state.chi != samples[2].state.chi);
  CHECK_THROWS_AS(sample_future_measurements(p, models.meas, 0, 1, rng), Error);
}

TEST_CASE("linear measurement density is the predictive Gaussian") {
  Rng rng(22);
  const Models models = linear_models(2, 2, rng);
  const auto& meas = std::get<LinearMeas>(models.meas.model);
  const PropagatedBelief p = propagate(state_belief(randn(2, rng), random_spd(2, rng)), control(randn(2, rng)),
                                       models.motion);
  const VectorXd z = randn(2, rng);
  const DataAssociation da{{{1, kDirect}}};
  const double got = measurement_likelihood_density({{kDirect, z}}, p, models.meas, da);
  const double want = log_normal_oracle(z, meas.H * p.robot_mean(), meas.H * p.robot_cov() * meas.H.transpose() + meas.noise);
  CHECK(got == doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("most likely measurement is the noise free prediction") {
  Rng rng(23);
  const Models models = linear_models(2, 1, rng);
  const auto& meas = std::get<LinearMeas>(models.meas.model);
  const PropagatedBelief p = propagate(state_belief(randn(2, rng), random_spd(2, rng)), control(randn(2, rng)),
                                       models.motion);
  const MeasurementSample s = most_likely_measurement(p, models.meas);
  CHECK((s.z.at(kDirect) - meas.H * p.robot_mean()).norm() < 1e-12);
}

TEST_CASE("balance weights") {
  const Toy toy;
  SUBCASE("nominal only gives unit weights") {
    const MisRecord rec = toy_record(toy, {0, 1, 2}, {});
    for (const auto& e : rec.entries) CHECK(balance_weight(e, rec) == 1.0);
  }
  SUBCASE("q equal to p gives unit weights") {
    Toy same = toy;
    same.q = same.p;
    const MisRecord rec = toy_record(same, {0, 3}, {1, 2, 2});
    for (const auto& e : rec.entries) CHECK(balance_weight(e, rec) == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("matches n p / sum n_m q_m") {
    const MisRecord rec = toy_record(toy, {0, 3}, {1, 2, 2});
    const std::vector<int> zs{0, 3, 1, 2, 2};
    for (std::size_t j = 0; j < zs.size(); ++j) {
      const int z = zs[j];
      const double want = 5.0 * toy.p[z] / (2.0 * toy.p[z] + 3.0 * toy.q[z]);
      CHECK(balance_weight(static_cast<int>(j), rec) == doctest::Approx(want).epsilon(1e-12));
    }
  }
  SUBCASE("zero nominal density gives zero weight") {
    MisRecord rec = toy_record(toy, {0}, {1});
    rec.entries[1].log_p = -std::numeric_limits<double>::infinity();
    CHECK(balance_weight(rec.entries[1], rec) == 0.0);
  }
  SUBCASE("missing path") {
    const MisRecord rec = toy_record(toy, {0}, {1});
    CHECK_THROWS_AS(balance_weight(7, rec), Error);
  }
}

TEST_CASE("balance heuristic estimator is unbiased on a discrete toy") {
  const Toy toy;
  double exact = 0.0;
  for (int z = 0; z < 4; ++z) exact += toy.p[z] * toy.f[z];
  Rng rng(24);
  std::discrete_distribution<int> dp(toy.p.begin(), toy.p.end()), dq(toy.q.begin(), toy.q.end());
  const int sets = 4000;
  double s1 = 0.0, s2 = 0.0;
  for (int k = 0; k < sets; ++k) {
    std::vector<int> a(2), b(3);
    for (int& z : a) z = dp(rng);
    for (int& z : b) z = dq(rng);
    const MisRecord rec = toy_record(toy, a, b);
    std::vector<int> zs = a;
    zs.insert(zs.end(), b.begin(), b.end());
    double est = 0.0;
    for (std::size_t j = 0; j < zs.size(); ++j) est += balance_weight(rec.entries[j], rec) * toy.f[zs[j]];
    est /= double(zs.size());
    s1 += est;
    s2 += est * est;
  }
  const double m = s1 / sets, se = std::sqrt((s2 / sets - m * m) / sets);
  CHECK(std::abs(m - exact) < 3.5 * se);
}
