#pragma once

#include "ixbsp/belief.hpp"

#include <optional>
#include <tuple>

namespace ixbsp {

enum class DistanceKind { SqrtJ, DaKey };

// Lexicographic ordering key: (|remove| + |add|, value gap over kept entries, index).
struct DaKey {
  int count = 0;
  double gap = 0.0;
  int index = 0;
  auto operator<=>(const DaKey& o) const {
    return std::tie(count, gap, index) <=> std::tie(o.count, o.gap, o.index);
  }
  bool operator==(const DaKey& o) const = default;
};

struct DistanceValue {
  DistanceKind kind = DistanceKind::SqrtJ;
  double value = 0.0;
  DaKey key;
  bool operator<(const DistanceValue& o) const { return kind == DistanceKind::SqrtJ ? value < o.value : key < o.key; }
};

struct Gaussian {
  VectorXd mean;
  MatrixXd cov;
};

// How a belief changed between its pre- and post-update versions.
struct PropagationSpec {
  std::optional<MatrixXd> A;  // whitened Jacobian stack; only for same-dimension updates
  MatrixXd gain;              // information added, in post-update coordinates
  VectorXd zeta;              // mean increment, in post-update coordinates
  MatrixXd zeta_cov;          // optional spread of zeta when it is random
  std::vector<int> pad;       // pad[i] = post-update offset of pre-update coordinate i
  int d_post = 0;
};

PropagationSpec make_propagation_spec(const GaussianBelief& before, const GaussianBelief& after,
                                      const std::optional<MatrixXd>& A = std::nullopt);

double kl_gaussian(const GaussianBelief& p, const GaussianBelief& q);
double d_sqrt_j(const GaussianBelief& p, const GaussianBelief& q);
double d_sqrt_j(const VectorXd& mp, const MatrixXd& Sp, const VectorXd& mq, const MatrixXd& Sq);

DaKey d_da(const GaussianBelief& a, const GaussianBelief& b, int index = 0);

DistanceValue distance(const GaussianBelief& p, const GaussianBelief& q, DistanceKind kind, int index = 0);

// Change of D^2 when both beliefs are propagated by their specs.
double incremental_delta(const GaussianBelief& b1, const GaussianBelief& b2, const PropagationSpec& s1,
                         const PropagationSpec& s2);

// Increment of the current-state estimate under one linear propagate/update cycle.
Gaussian zeta_distribution(const GaussianBelief& b, const ActionId& action, const Models& models);

// Measurement likelihood of a linear one-step cycle: N(HF mu + HJu, Sv + H Sw H' + HF S F'H').
Gaussian linear_measurement_likelihood(const GaussianBelief& b, const ActionId& action, const Models& models);

struct QuadMoments {
  double mean = 0.0;
  double variance = 0.0;
};

// Moments of x'Cx + c'x + y for x ~ N(mu, Sigma).
QuadMoments gaussian_quadratic_moments(const MatrixXd& C, const VectorXd& c, double y, const VectorXd& mu,
                                       const MatrixXd& Sigma);

bool check_chi_squared_conditions(const MatrixXd& C, const VectorXd& c, double y, const MatrixXd& Sigma);

}  // namespace ixbsp
