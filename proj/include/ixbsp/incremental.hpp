#pragma once

#include "ixbsp/planner.hpp"

#include <memory>
#include <utility>

namespace ixbsp {

struct PlanningArchive {
  std::shared_ptr<const PlanningTree> tree;
  std::vector<int> executed;  // action indices executed since that session
};

// One sample path at one lookahead depth. log_q[m] is its log density under
// distribution m; entries for nominal distributions are ignored (q = p).
struct MisEntry {
  int path = 0;
  int m = 0;
  double log_p = 0.0;
  std::vector<double> log_q;
};

struct MisRecord {
  std::vector<MisEntry> entries;
  std::vector<int> n;         // samples drawn from each distribution
  std::vector<bool> nominal;  // distribution m is the nominal one
  int total() const;
};

double balance_weight(const MisEntry& e, const MisRecord& record);
double balance_weight(int path, const MisRecord& record);

// Record for the depth-th lookahead step (1-based) along seq.
MisRecord mis_record(const PlanningTree& tree, const std::vector<int>& seq, int depth);
double mis_objective(const PlanningTree& tree, const std::vector<int>& seq);
// Single-path estimator: weight is the product of p/q over reused steps.
double iml_objective(const PlanningTree& tree, const std::vector<int>& seq);

struct BranchSelection {
  DistanceValue dist;
  double sqrtj = 0.0;  // thresholds always use the SqrtJ distance
  int node = -1;
};

BranchSelection select_closest_branch(const PlanningArchive& archive, const GaussianBelief& posterior,
                                      const ScenarioConfig& cfg);

std::pair<DistanceValue, int> closest_belief(const std::vector<BeliefPtr>& candidates, const GaussianBelief& target,
                                             DistanceKind kind);

bool is_representative(const StateSample& chi, const GaussianBelief& prop, double beta_sigma, RepTest test);

struct RepSample {
  MeasurementSample sample;
  bool reused = false;
  int origin_slot = -1;  // index into the input samples when reused
};

// Keeps samples whose generating state is representative of prop; the others are
// redrawn from prop, n_z measurements per rejected state.
std::vector<RepSample> is_rep_sample(const std::vector<MeasurementSample>& samples, const PropagatedBelief& prop,
                                     const ScenarioConfig& cfg, Rng& rng);

PlanningTree inc_update_belief_tree(const PlanningTree& archive, int branch_root, const BeliefPtr& posterior,
                                    const ScenarioConfig& cfg, bool wildfire_root, const BuildOptions& opt = {});

struct PlanResult {
  PlanningTree tree;
  Choice choice;
  double branch_dist = -1.0;  // negative when no archive was used
  bool branch_wildfire = false;
  bool fallback = false;
  double select_ms = 0.0;
  double total_ms() const;
  double overlap_ms() const;  // without the final lookahead level
};

PlanResult plan_xbsp(const BeliefPtr& posterior, const ScenarioConfig& cfg, const BuildOptions& opt = {});
PlanResult plan_ml(const BeliefPtr& posterior, const ScenarioConfig& cfg, const BuildOptions& opt = {});
PlanResult plan_ixbsp(const PlanningArchive* archive, const BeliefPtr& posterior, const ScenarioConfig& cfg,
                      const BuildOptions& opt = {});
PlanResult plan_iml(const PlanningArchive* archive, const BeliefPtr& posterior, const ScenarioConfig& cfg,
                    const BuildOptions& opt = {});

}  // namespace ixbsp
