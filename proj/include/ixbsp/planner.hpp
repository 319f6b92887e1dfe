#pragma once

#include "ixbsp/config.hpp"
#include "ixbsp/sampling.hpp"

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

namespace ixbsp {

enum class NodeKind { Root, Propagated, Posterior };
enum class Origin { Fresh, ReusedUpdated, ReusedWildfire };
enum class TreeKind { XBSP, ML, IXBSP, IML };

struct TreeNode {
  int id = 0;
  int parent = -1;
  int depth = 0;  // actions taken from the root
  NodeKind kind = NodeKind::Root;
  BeliefPtr belief;
  std::optional<ActionId> action;
  std::optional<MeasurementSample> sample;
  double reward = 0.0;
  std::vector<int> children;  // posterior: one propagated child per action; propagated: sample slots
  bool wildfire = false;
  Origin origin = Origin::Fresh;
  std::vector<int> path;  // child slots from the root, seeds the node's rng stream

  // Provenance of a posterior node's step sample.
  double log_p = 0.0;                                        // under this tree's propagated parent
  double log_q = -std::numeric_limits<double>::infinity();  // under the matched archived propagated belief
  bool reused = false;                                       // sample taken from the archive at this step
  int source = -1;                                           // archived node it was derived from
  double match_dist = std::numeric_limits<double>::quiet_NaN();
};

struct TreeStats {
  int fresh = 0;
  int reused = 0;
  int wildfire = 0;
  int resampled = 0;
  FactorStats factors;
  int solves = 0;
};

struct PlanningTree {
  TreeKind kind = TreeKind::XBSP;
  int k = 0;
  int L = 0;
  std::vector<ActionId> actions;
  std::vector<TreeNode> nodes;
  TreeStats stats;
  std::vector<double> level_ms;  // wall time spent building each depth

  int n_u() const { return static_cast<int>(actions.size()); }
  int sequence_count() const;
  std::vector<int> sequence(int index) const;  // action indices, first action most significant
  std::vector<int> posterior_nodes(int depth) const;
  // Posterior nodes reached at each depth 1..L by following seq.
  std::vector<std::vector<int>> nodes_along(const std::vector<int>& seq) const;
  int belief_count() const;  // posterior plus propagated nodes, root excluded
};

struct BuildOptions {
  bool parallel = true;
};

double reward_info_distance(const GaussianBelief& belief, const GaussianBelief& prev, const RewardSpec& spec);
double reward(const GaussianBelief& belief, const GaussianBelief& prev, const RewardSpec& spec);

PlanningTree build_tree_xbsp(const BeliefPtr& posterior, const ScenarioConfig& cfg, const BuildOptions& opt = {});
PlanningTree build_tree_ml(const BeliefPtr& posterior, const ScenarioConfig& cfg, const BuildOptions& opt = {});

// Plain sample average per depth (all weights one).
double objective(const PlanningTree& tree, const std::vector<int>& seq);
double objective(const PlanningTree& tree, int seq_index);

struct Choice {
  int index = 0;
  std::vector<int> sequence;
  double value = 0.0;
  std::vector<double> values;
};

// Estimator matching the tree kind: plain averages for fresh trees, importance weighted otherwise.
double tree_objective(const PlanningTree& tree, const std::vector<int>& seq);

// Argmax over candidate sequences of the tree's own estimator; ties go to the lowest index.
Choice best_action(const PlanningTree& tree);
Choice best_of(const std::vector<double>& values, const PlanningTree& tree);

// Tree construction pieces shared with the incremental planner.
namespace detail {

struct Expansion {
  TreeNode prop;
  std::vector<TreeNode> posts;
  FactorStats factors;
  int resampled = 0;
};

PropagatedBelief as_propagated(const TreeNode& prop_node);
TreeNode make_prop_node(const TreeNode& parent, int action_index, const ScenarioConfig& cfg);
TreeNode make_post_node(const TreeNode& prop, const PropagatedBelief& pb, const TreeNode& grand, MeasurementSample s,
                        int slot, const ScenarioConfig& cfg, bool with_density);
// Runs body(i) for i in [0, n), in parallel when asked; the first exception is rethrown.
void parallel_for(int n, bool parallel, const std::function<void(int)>& body);
// Fresh expansion of one posterior node by one action.
Expansion expand_fresh(const TreeNode& parent, int action_index, const ScenarioConfig& cfg, bool ml,
                       bool with_density = false);
// Appends expansions in order, assigning ids and wiring children.
void append(PlanningTree& tree, std::vector<Expansion>& parts);
TreeNode root_node(const BeliefPtr& posterior);

}  // namespace detail

}  // namespace ixbsp
