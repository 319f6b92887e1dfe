#pragma once

#include "ixbsp/planner.hpp"

#include <cstdint>
#include <vector>

namespace ixbsp {

struct HolderSpec {
  double lambda = 1.0;
  double alpha = 1.0;
  void check() const;
};

enum class BoundMethod { Sampled, Analytic };

struct BoundReport {
  double lower = 0.0;
  double upper = 0.0;
  double phi = 0.0;
  double psi = 0.0;
  std::vector<double> expected_delta;  // per lookahead step
  BoundMethod method = BoundMethod::Sampled;
  bool advisory = false;  // Hölder constant failed verification
};

// (4 ln 2)^(alpha/2) * lambda * D^alpha
double reward_bound(const GaussianBelief& b, const GaussianBelief& b2, const HolderSpec& spec);
double reward_bound(double dist, const HolderSpec& spec);

// Per-level sample weights along a sequence; empty means uniform 1/n_i.
using PathWeights = std::vector<std::vector<double>>;

// Paths are paired by slot position; the trees must share their shape along seq.
BoundReport objective_bound_sampled(const PlanningTree& now, const PlanningTree& prev, const std::vector<int>& seq,
                                    const HolderSpec& spec, const PathWeights& weights = {});

// r(b) = scale * E_b[Phi((w'x - offset) / softness)]; values lie in [0, scale], so the
// reward is Hölder with lambda = scale / 2 and alpha = 1.
struct BoundedReward {
  VectorXd w;
  double offset = 0.0;
  double softness = 1.0;
  double scale = 1.0;

  double operator()(const VectorXd& mean, const MatrixXd& cov) const;
  double operator()(const GaussianBelief& b) const { return (*this)(b.mean, b.cov); }
  HolderSpec holder() const { return {0.5 * scale, 1.0}; }
};

// Linear-Gaussian filter over the robot state: the belief at each lookahead step is the
// posterior of the current state only.
struct LinearScenario {
  Models models;  // LinearMotion + LinearMeas
  std::vector<ActionId> actions;
  int steps = 2;  // lookahead steps after the shared prefix (L - l)
  BoundedReward reward;

  int n_u() const { return static_cast<int>(actions.size()); }
  int sequence_count() const;
  std::vector<int> sequence(int index) const;
  void check() const;

  static LinearScenario planar_default();
};

// Posterior means as affine maps of the stacked measurement sequence: mu_i = a_i + B_i z.
struct LinearRollout {
  std::vector<VectorXd> a;
  std::vector<MatrixXd> B;
  std::vector<MatrixXd> cov;  // posterior covariances (deterministic)
  VectorXd z_mean;            // predictive distribution of the stacked z
  MatrixXd z_cov;
};

LinearRollout linear_rollout(const LinearScenario& s, const VectorXd& mean, const MatrixXd& cov,
                             const std::vector<int>& seq);

// Exact expected objective sum_i E[r(b_i)] under the belief's own predictive.
double linear_objective(const LinearScenario& s, const VectorXd& mean, const MatrixXd& cov,
                        const std::vector<int>& seq);

struct BoundProblem {
  LinearScenario scenario;
  VectorXd mean_now, mean_prev;
  MatrixXd cov_now, cov_prev;
  std::vector<int> seq;
};

// Bound on J_now - J_prev. phi comes from self-normalised Monte-Carlo over
// sequences drawn from the previous predictive; psi uses E[D_i^2] from Gaussian quadratic
// moments of the stacked measurements.
BoundReport objective_bound_analytic(const BoundProblem& p, const HolderSpec& spec, double eps_wf,
                                     int phi_samples = 4000, std::uint64_t seed = 7);

// E_now[D^2(b_now_i(z), b_prev_i(z))] for each lookahead step i.
std::vector<double> expected_sq_distance(const BoundProblem& p);

// Checks |r(b) - r(b')| <= bound over random belief pairs around `center`.
bool verify_holder(const BoundedReward& r, const HolderSpec& spec, const VectorXd& center, int pairs,
                   std::uint64_t seed);

// Pair of beliefs at exactly the requested SqrtJ distance (mean shift along a random direction).
struct ForcedPair {
  VectorXd mean_now, mean_prev;
  MatrixXd cov;
};
ForcedPair forced_pair(int dim, double dist, std::uint64_t seed);

struct BoundSample {
  int trial = 0;
  int seq = 0;
  double diff = 0.0;
  BoundReport report;
  bool within = false;
};

struct BoundCheck {
  double eps_wf = 0.0;
  std::vector<BoundSample> samples;
  double fraction_within = 0.0;
  double variance = 0.0;  // of the objective differences
  bool holder_verified = false;
};

BoundCheck empirical_bound_check(const LinearScenario& s, const HolderSpec& spec, double eps_wf, int trials,
                                 std::uint64_t seed, bool parallel = true);

}  // namespace ixbsp
