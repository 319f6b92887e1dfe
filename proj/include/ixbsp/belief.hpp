#pragma once

#include "ixbsp/errors.hpp"
#include "ixbsp/models.hpp"
#include "ixbsp/types.hpp"

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

namespace ixbsp {

class GaussianBelief;
using BeliefPtr = std::shared_ptr<const GaussianBelief>;

// One motion (optional) plus one measurement set, creating robot time `time`.
struct Step {
  int time = 0;
  std::optional<ActionId> action;
  bool measured = false;
  MeasurementSet z;
  DataAssociation da;
  std::map<int, Eigen::Vector2d> new_landmarks;  // id -> initialisation prior mean

  bool operator==(const Step& o) const;
};

// Factors hanging off an anchor prior. The anchor is itself a belief and keeps
// its own history, so the chain can be walked back for lineage checks.
struct History {
  BeliefPtr anchor;
  std::vector<Step> steps;

  std::vector<ActionId> actions() const;
  std::vector<MeasurementSet> measurements() const;
  std::vector<DataAssociation> da() const;
  int factor_count() const;
};

class GaussianBelief {
 public:
  std::vector<VariableId> index;
  VectorXd mean;
  MatrixXd cov;
  MatrixXd info;
  Label label;
  History history;

  static GaussianBelief from_covariance(std::vector<VariableId> index, VectorXd mean, MatrixXd cov,
                                        Label label = {});
  static GaussianBelief from_information(std::vector<VariableId> index, VectorXd mean, MatrixXd info,
                                         Label label = {});

  int dim() const { return static_cast<int>(mean.size()); }
  int offset(const VariableId& v) const;  // -1 when absent
  bool has(const VariableId& v) const { return offset(v) >= 0; }
  VariableId robot_var() const;           // latest pose/state variable
  VectorXd robot_mean() const;
  MatrixXd robot_cov() const;
  std::vector<int> landmark_ids() const;
};

struct PropagatedBelief : GaussianBelief {
  ActionId pending;
};

struct FactorStats {
  int existing = 0;  // factors over states shared with the reused belief
  int reused = 0;    // kept with identical value
  int revalued = 0;  // kept, value changed
  int removed = 0;
  int added = 0;
};

struct SolveOptions {
  double tol = 1e-10;
  int max_iterations = 40;
};

void validate(const GaussianBelief& b);

// Copy of b whose history is rooted at b itself, so planning factors hang off it.
GaussianBelief rebase(const BeliefPtr& b);

PropagatedBelief propagate(const GaussianBelief& b, const ActionId& action, const MotionModel& motion);

GaussianBelief update_with_measurements(const PropagatedBelief& prop, const MeasurementSet& z,
                                        const DataAssociation& da, const Models& models,
                                        const std::set<int>& new_landmarks = {});

// Measurement update at the current robot time without motion.
GaussianBelief sense(const GaussianBelief& b, const MeasurementSet& z, const DataAssociation& da,
                     const Models& models, const std::set<int>& new_landmarks = {});

DaDiff da_diff(const DataAssociation& source, const DataAssociation& target);

// The reused belief was `from` plus some step factors; the target is `to` plus the same kind of
// factors. Only shapes the starting point of the solve.
struct PriorSwap {
  const GaussianBelief* from = nullptr;
  const GaussianBelief* to = nullptr;
};

GaussianBelief incremental_update(const GaussianBelief& reused, const History& target, const Models& models,
                                  FactorStats* stats = nullptr, const PriorSwap& swap = {});

GaussianBelief marginal(const GaussianBelief& b, const std::vector<VariableId>& vars);

// Batch MAP solve of anchor prior plus all step factors.
// Variables present in `warm` start from its mean; the rest from motion/initialisation.
GaussianBelief solve_history(const History& h, const Models& models, const GaussianBelief* warm = nullptr,
                             const SolveOptions& opt = {}, int* iterations = nullptr);

// Inverse of an SPD matrix; throws `kind` when the factorisation fails.
MatrixXd spd_inverse(const MatrixXd& m, ErrorKind kind);

// Steps of h and of its anchors with time >= min_time, oldest first.
std::vector<Step> collect_steps(const History& h, int min_time);

}  // namespace ixbsp
