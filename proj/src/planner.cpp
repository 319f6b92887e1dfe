#include "ixbsp/planner.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <numbers>

namespace ixbsp {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct Focus {
  VectorXd position;
  MatrixXd cov;
};

Focus focus_of(const GaussianBelief& b, FocusedVars f) {
  const VariableId rv = b.robot_var();
  const int o = b.offset(rv);
  const int pos_dim = std::min(2, rv.dim);
  const int n = f == FocusedVars::Position ? pos_dim : rv.dim;
  return {b.mean.segment(o, pos_dim), b.cov.block(o, o, n, n)};
}

double distance_to_goal(const VectorXd& position, const Eigen::Vector2d& goal) {
  return (position - goal.head(position.size())).norm();
}

}  // namespace

double reward_info_distance(const GaussianBelief& belief, const GaussianBelief& prev, const RewardSpec& spec) {
  if (spec.alpha < 0.0 || spec.alpha > 1.0) throw Error(ErrorKind::InvalidInput, "alpha outside [0, 1]");
  const Focus now = focus_of(belief, spec.focused);
  const Focus before = focus_of(prev, spec.focused);
  const double progress = distance_to_goal(before.position, spec.goal) - distance_to_goal(now.position, spec.goal);
  if (spec.alpha == 0.0) return progress;
  Eigen::LLT<MatrixXd> llt(now.cov);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::DegenerateUpdate, "focused covariance is singular");
  const double log_det_info = -2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double n = double(now.cov.rows());
  const double info = 0.5 * (n * std::log(2.0 * std::numbers::pi * std::numbers::e) + log_det_info);
  return spec.alpha * info + (1.0 - spec.alpha) * progress;
}

double reward(const GaussianBelief& belief, const GaussianBelief& prev, const RewardSpec& spec) {
  if (spec.kind == RewardKind::InfoDistance) return reward_info_distance(belief, prev, spec);
  const Focus now = focus_of(belief, FocusedVars::Position);
  const Focus before = focus_of(prev, FocusedVars::Position);
  const double progress = distance_to_goal(before.position, spec.goal) - distance_to_goal(now.position, spec.goal);
  const double spread = std::sqrt(now.cov.trace());
  return progress - spec.cov_weight * std::max(0.0, spread - spec.cov_threshold);
}

int PlanningTree::sequence_count() const {
  int n = 1;
  for (int i = 0; i < L; ++i) n *= n_u();
  return n;
}

std::vector<int> PlanningTree::sequence(int index) const {
  if (index < 0 || index >= sequence_count()) throw Error(ErrorKind::UnknownSequence, std::to_string(index));
  std::vector<int> seq(L);
  for (int i = L - 1; i >= 0; --i) {
    seq[i] = index % n_u();
    index /= n_u();
  }
  return seq;
}

std::vector<int> PlanningTree::posterior_nodes(int depth) const {
  std::vector<int> out;
  for (const auto& n : nodes)
    if (n.kind == NodeKind::Posterior && n.depth == depth) out.push_back(n.id);
  return out;
}

std::vector<std::vector<int>> PlanningTree::nodes_along(const std::vector<int>& seq) const {
  if (static_cast<int>(seq.size()) != L) throw Error(ErrorKind::UnknownSequence, "sequence length differs from horizon");
  std::vector<std::vector<int>> levels;
  std::vector<int> cur{0};
  for (int i = 0; i < L; ++i) {
    if (seq[i] < 0 || seq[i] >= n_u()) throw Error(ErrorKind::UnknownSequence, "action index out of range");
    std::vector<int> next;
    for (int id : cur) {
      const TreeNode& n = nodes[id];
      if (static_cast<int>(n.children.size()) != n_u()) throw Error(ErrorKind::UnknownSequence, "tree is incomplete");
      const TreeNode& p = nodes[n.children[seq[i]]];
      next.insert(next.end(), p.children.begin(), p.children.end());
    }
    levels.push_back(next);
    cur = std::move(next);
  }
  return levels;
}

int PlanningTree::belief_count() const { return static_cast<int>(nodes.size()) - 1; }

namespace detail {

void parallel_for(int n, bool parallel, const std::function<void(int)>& body) {
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

TreeNode root_node(const BeliefPtr& posterior) {
  TreeNode r;
  r.kind = NodeKind::Root;
  r.belief = std::make_shared<const GaussianBelief>(rebase(posterior));
  return r;
}

PropagatedBelief as_propagated(const TreeNode& prop_node) {
  return *std::static_pointer_cast<const PropagatedBelief>(prop_node.belief);
}

TreeNode make_prop_node(const TreeNode& parent, int action_index, const ScenarioConfig& cfg) {
  TreeNode n;
  n.kind = NodeKind::Propagated;
  n.parent = parent.id;
  n.depth = parent.depth + 1;
  n.action = cfg.actions[action_index];
  n.path = parent.path;
  n.path.push_back(action_index);
  n.belief = std::make_shared<const PropagatedBelief>(propagate(*parent.belief, *n.action, cfg.models.motion));
  return n;
}

TreeNode make_post_node(const TreeNode& prop, const PropagatedBelief& pb, const TreeNode& grand, MeasurementSample s,
                        int slot, const ScenarioConfig& cfg, bool with_density) {
  TreeNode n;
  n.kind = NodeKind::Posterior;
  n.depth = prop.depth;
  n.action = prop.action;
  n.path = prop.path;
  n.path.push_back(slot);
  n.belief = std::make_shared<const GaussianBelief>(update_with_measurements(pb, s.z, s.da, cfg.models));
  n.reward = reward(*n.belief, *grand.belief, cfg.reward);
  if (with_density) n.log_p = measurement_likelihood_density(s.z, pb, cfg.models.meas, s.da);
  n.sample = std::move(s);
  return n;
}

Expansion expand_fresh(const TreeNode& parent, int action_index, const ScenarioConfig& cfg, bool ml,
                       bool with_density) {
  Expansion e;
  e.prop = make_prop_node(parent, action_index, cfg);
  const PropagatedBelief pb = as_propagated(e.prop);
  std::vector<MeasurementSample> samples;
  if (ml) {
    samples.push_back(most_likely_measurement(pb, cfg.models.meas));
  } else {
    Rng rng(stream_seed(cfg.seed, e.prop.path));
    samples = sample_future_measurements(pb, cfg.models.meas, cfg.n_x, cfg.n_z, rng, cfg.sample_landmarks);
  }
  for (size_t s = 0; s < samples.size(); ++s)
    e.posts.push_back(make_post_node(e.prop, pb, parent, std::move(samples[s]), static_cast<int>(s), cfg, with_density));
  return e;
}

void append(PlanningTree& tree, std::vector<Expansion>& parts) {
  for (auto& e : parts) {
    auto& f = tree.stats.factors;
    f.existing += e.factors.existing;
    f.reused += e.factors.reused;
    f.revalued += e.factors.revalued;
    f.removed += e.factors.removed;
    f.added += e.factors.added;
    tree.stats.resampled += e.resampled;
    const int pid = static_cast<int>(tree.nodes.size());
    e.prop.id = pid;
    e.prop.children.clear();
    tree.nodes[e.prop.parent].children.push_back(pid);
    tree.nodes.push_back(std::move(e.prop));
    for (auto& p : e.posts) {
      p.id = static_cast<int>(tree.nodes.size());
      p.parent = pid;
      p.children.clear();
      tree.nodes[pid].children.push_back(p.id);
      switch (p.origin) {
        case Origin::Fresh: ++tree.stats.fresh; break;
        case Origin::ReusedUpdated: ++tree.stats.reused; break;
        case Origin::ReusedWildfire: ++tree.stats.wildfire; break;
      }
      tree.nodes.push_back(std::move(p));
    }
  }
}

}  // namespace detail

namespace {

PlanningTree build_fresh(const BeliefPtr& posterior, const ScenarioConfig& cfg, const BuildOptions& opt, bool ml) {
  cfg.check();
  PlanningTree tree;
  tree.kind = ml ? TreeKind::ML : TreeKind::XBSP;
  tree.k = posterior->label.t;
  tree.L = cfg.L;
  tree.actions = cfg.actions;
  tree.nodes.push_back(detail::root_node(posterior));
  std::vector<int> frontier{0};
  const int nu = cfg.n_u();
  for (int depth = 0; depth < cfg.L; ++depth) {
    const auto t0 = Clock::now();
    std::vector<detail::Expansion> parts(frontier.size() * nu);
    detail::parallel_for(static_cast<int>(parts.size()), opt.parallel, [&](int j) {
      parts[j] = detail::expand_fresh(tree.nodes[frontier[j / nu]], j % nu, cfg, ml);
    });
    const int first = static_cast<int>(tree.nodes.size());
    detail::append(tree, parts);
    frontier.clear();
    for (int id = first; id < static_cast<int>(tree.nodes.size()); ++id)
      if (tree.nodes[id].kind == NodeKind::Posterior) frontier.push_back(id);
    tree.stats.solves += static_cast<int>(frontier.size());
    tree.level_ms.push_back(ms_since(t0));
  }
  return tree;
}

}  // namespace

PlanningTree build_tree_xbsp(const BeliefPtr& posterior, const ScenarioConfig& cfg, const BuildOptions& opt) {
  return build_fresh(posterior, cfg, opt, false);
}

PlanningTree build_tree_ml(const BeliefPtr& posterior, const ScenarioConfig& cfg, const BuildOptions& opt) {
  ScenarioConfig c = cfg;
  c.n_x = c.n_z = 1;
  return build_fresh(posterior, c, opt, true);
}

double objective(const PlanningTree& tree, const std::vector<int>& seq) {
  double J = 0.0;
  for (const auto& level : tree.nodes_along(seq)) {
    double sum = 0.0;
    for (int id : level) sum += tree.nodes[id].reward;
    J += sum / double(level.size());
  }
  return J;
}

double objective(const PlanningTree& tree, int seq_index) { return objective(tree, tree.sequence(seq_index)); }

Choice best_of(const std::vector<double>& values, const PlanningTree& tree) {
  if (values.empty()) throw Error(ErrorKind::EmptyCandidates, "no candidate sequences");
  Choice c;
  c.values = values;
  c.index = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i)
    if (values[i] > values[c.index]) c.index = i;
  c.value = values[c.index];
  c.sequence = tree.sequence(c.index);
  return c;
}

Choice best_action(const PlanningTree& tree) {
  std::vector<double> values(tree.sequence_count());
  for (int i = 0; i < tree.sequence_count(); ++i) values[i] = tree_objective(tree, tree.sequence(i));
  return best_of(values, tree);
}

}  // namespace ixbsp
