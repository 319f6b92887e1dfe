#include "ixbsp/incremental.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

namespace ixbsp {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Posterior nodes from depth 1 down to `id`, root excluded.
std::vector<const TreeNode*> posterior_chain(const PlanningTree& tree, int id) {
  std::vector<const TreeNode*> chain;
  while (id > 0) {
    const TreeNode& n = tree.nodes[id];
    if (n.kind == NodeKind::Posterior) chain.push_back(&n);
    id = n.parent;
  }
  std::reverse(chain.begin(), chain.end());
  return chain;
}

std::vector<int> action_prefix(const TreeNode& n) {
  std::vector<int> out;
  for (size_t i = 0; i < n.path.size(); i += 2) out.push_back(n.path[i]);
  return out;
}

int chi_offset(const StateSample& chi, const VariableId& v) {
  int o = 0;
  for (const auto& id : chi.index) {
    if (id == v) return o;
    o += id.dim;
  }
  return -1;
}

}  // namespace

int MisRecord::total() const {
  int t = 0;
  for (int c : n) t += c;
  return t;
}

double balance_weight(const MisEntry& e, const MisRecord& record) {
  const int n = record.total();
  bool any_reused = false;
  for (size_t m = 0; m < record.n.size(); ++m) any_reused |= !record.nominal[m] && record.n[m] > 0;
  if (!any_reused) return 1.0;
  if (e.log_p == kNegInf) return 0.0;
  double M = kNegInf;
  std::vector<double> delta(record.n.size(), kNegInf);
  for (size_t m = 0; m < record.n.size(); ++m) {
    if (record.n[m] == 0) continue;
    delta[m] = record.nominal[m] ? 0.0 : e.log_q.at(m) - e.log_p;
    M = std::max(M, delta[m]);
  }
  if (!std::isfinite(M)) throw Error(ErrorKind::NumericalError, "balance heuristic denominator is zero");
  double denom = 0.0;
  for (size_t m = 0; m < record.n.size(); ++m)
    if (record.n[m] > 0) denom += record.n[m] * std::exp(delta[m] - M);
  if (!(denom > 0.0)) throw Error(ErrorKind::NumericalError, "balance heuristic denominator is zero");
  return double(n) * std::exp(-M) / denom;
}

double balance_weight(int path, const MisRecord& record) {
  for (const auto& e : record.entries)
    if (e.path == path) return balance_weight(e, record);
  throw Error(ErrorKind::IncompleteRecord, "no entry for path " + std::to_string(path));
}

// Two distributions per step: the nominal one and the archived generator. A path
// counts as reused only when every step on it re-used an archived sample; paths
// crossing wildfire nodes are treated as nominal with q = p, so their weight is one.
MisRecord mis_record(const PlanningTree& tree, const std::vector<int>& seq, int depth) {
  const auto levels = tree.nodes_along(seq);
  if (depth < 1 || depth > static_cast<int>(levels.size()))
    throw Error(ErrorKind::IncompleteRecord, "depth outside horizon");
  MisRecord rec;
  rec.n = {0, 0};
  rec.nominal = {true, false};
  for (int id : levels[depth - 1]) {
    MisEntry e;
    e.path = id;
    double lp = 0.0, lq = 0.0;
    bool all_reused = true, wildfire = false;
    for (const TreeNode* n : posterior_chain(tree, id)) {
      if (!n->sample && !n->wildfire) throw Error(ErrorKind::IncompleteRecord, "node without sample");
      if (std::isnan(n->log_p) || std::isnan(n->log_q)) throw Error(ErrorKind::IncompleteRecord, "missing density");
      wildfire |= n->wildfire;
      all_reused &= n->reused;
      lp += n->log_p;
      lq += n->log_q;
    }
    if (wildfire) {
      e.m = 0;
      e.log_p = 0.0;
      e.log_q = {0.0, 0.0};
    } else {
      e.m = all_reused ? 1 : 0;
      e.log_p = lp;
      e.log_q = {lp, lq};
    }
    ++rec.n[e.m];
    rec.entries.push_back(std::move(e));
  }
  return rec;
}

double mis_objective(const PlanningTree& tree, const std::vector<int>& seq) {
  double J = 0.0;
  for (int i = 1; i <= tree.L; ++i) {
    const MisRecord rec = mis_record(tree, seq, i);
    double sum = 0.0;
    for (const auto& e : rec.entries) sum += balance_weight(e, rec) * tree.nodes[e.path].reward;
    J += sum / double(rec.entries.size());
  }
  return J;
}

double iml_objective(const PlanningTree& tree, const std::vector<int>& seq) {
  double J = 0.0;
  for (const auto& level : tree.nodes_along(seq)) {
    double sum = 0.0;
    for (int id : level) {
      double log_w = 0.0;
      for (const TreeNode* n : posterior_chain(tree, id))
        if (n->reused && !n->wildfire) log_w += n->log_p - n->log_q;
      sum += std::exp(log_w) * tree.nodes[id].reward;
    }
    J += sum / double(level.size());
  }
  return J;
}

double tree_objective(const PlanningTree& tree, const std::vector<int>& seq) {
  switch (tree.kind) {
    case TreeKind::XBSP:
    case TreeKind::ML: return objective(tree, seq);
    case TreeKind::IXBSP: return mis_objective(tree, seq);
    case TreeKind::IML: return iml_objective(tree, seq);
  }
  return objective(tree, seq);
}

std::pair<DistanceValue, int> closest_belief(const std::vector<BeliefPtr>& candidates, const GaussianBelief& target,
                                             DistanceKind kind) {
  if (candidates.empty()) throw Error(ErrorKind::EmptyCandidates, "no candidate beliefs");
  std::pair<DistanceValue, int> best{distance(*candidates[0], target, kind, 0), 0};
  for (int i = 1; i < static_cast<int>(candidates.size()); ++i) {
    DistanceValue d = distance(*candidates[i], target, kind, i);
    if (d < best.first) best = {d, i};
  }
  return best;
}

BranchSelection select_closest_branch(const PlanningArchive& archive, const GaussianBelief& posterior,
                                      const ScenarioConfig& cfg) {
  if (!archive.tree) throw Error(ErrorKind::IncompatibleHorizon, "empty archive");
  const PlanningTree& prev = *archive.tree;
  const int l = static_cast<int>(archive.executed.size());
  if (l < 1 || l >= prev.L) throw Error(ErrorKind::IncompatibleHorizon, "executed prefix must lie in [1, L)");
  std::vector<int> all = prev.posterior_nodes(l);
  if (all.empty()) throw Error(ErrorKind::IncompatibleHorizon, "archive shallower than executed prefix");
  std::vector<int> ids;
  for (int id : all)
    if (action_prefix(prev.nodes[id]) == archive.executed) ids.push_back(id);
  if (ids.empty()) ids = std::move(all);
  std::vector<BeliefPtr> beliefs;
  for (int id : ids) beliefs.push_back(prev.nodes[id].belief);
  const auto [d, i] = closest_belief(beliefs, posterior, cfg.distance);
  BranchSelection out;
  out.dist = d;
  out.node = ids[i];
  out.sqrtj = cfg.distance == DistanceKind::SqrtJ ? d.value : d_sqrt_j(*beliefs[i], posterior);
  return out;
}

bool is_representative(const StateSample& chi, const GaussianBelief& prop, double beta_sigma, RepTest test) {
  const VariableId rv = prop.robot_var();
  const int oc = chi_offset(chi, rv);
  const int op = prop.offset(rv);
  if (oc < 0 || oc + rv.dim > chi.chi.size()) throw Error(ErrorKind::IncompatibleStates, "sample lacks " + rv.str());
  VectorXd d = chi.chi.segment(oc, rv.dim) - prop.mean.segment(op, rv.dim);
  if (rv.kind == VarKind::Pose) d[2] = wrap_angle(d[2]);
  const MatrixXd S = prop.cov.block(op, op, rv.dim, rv.dim);
  if (test == RepTest::PerCoordinate) {
    for (int j = 0; j < rv.dim; ++j)
      if (std::abs(d[j]) > beta_sigma * std::sqrt(S(j, j))) return false;
    return true;
  }
  Eigen::LLT<MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::InvalidBelief, "pose covariance not positive definite");
  return d.dot(llt.solve(d)) <= beta_sigma * beta_sigma * rv.dim;
}

std::vector<RepSample> is_rep_sample(const std::vector<MeasurementSample>& samples, const PropagatedBelief& prop,
                                     const ScenarioConfig& cfg, Rng& rng) {
  std::vector<RepSample> out;
  size_t i = 0;
  while (i < samples.size()) {
    size_t j = i + 1;
    while (j < samples.size() && samples[j].state.chi == samples[i].state.chi) ++j;
    if (is_representative(samples[i].state, prop, cfg.beta_sigma, cfg.rep_test)) {
      for (size_t s = i; s < j; ++s) out.push_back({samples[s], true, static_cast<int>(s)});
    } else {
      auto fresh = sample_future_measurements(prop, cfg.models.meas, 1, static_cast<int>(j - i), rng,
                                              cfg.sample_landmarks);
      for (auto& f : fresh) out.push_back({std::move(f), false, -1});
    }
    i = j;
  }
  return out;
}

namespace {

// Archived propagated nodes under the branch root sharing a relative depth and action,
// with marginals over the variables they share with the new tree cached once.
struct Group {
  std::vector<int> ids;
  std::vector<BeliefPtr> margs;
  std::vector<VariableId> common;
};

std::vector<VariableId> common_vars(const GaussianBelief& target, const std::vector<int>& ids,
                                    const PlanningTree& prev) {
  std::vector<VariableId> common;
  for (const auto& v : target.index) {
    bool everywhere = true;
    for (int id : ids) everywhere &= prev.nodes[id].belief->has(v);
    if (everywhere) common.push_back(v);
  }
  std::sort(common.begin(), common.end());
  return common;
}

bool has_all(const GaussianBelief& b, const std::vector<VariableId>& vars) {
  for (const auto& v : vars)
    if (!b.has(v)) return false;
  return true;
}

class TreeUpdater {
 public:
  TreeUpdater(const PlanningTree& prev, int branch, const ScenarioConfig& cfg, bool ml, const BuildOptions& opt)
      : prev_(prev), branch_(branch), cfg_(cfg), ml_(ml), opt_(opt) {
    const TreeNode& b = prev.nodes[branch];
    std::vector<int> stack{branch};
    while (!stack.empty()) {
      const int id = stack.back();
      stack.pop_back();
      const TreeNode& n = prev.nodes[id];
      if (n.kind == NodeKind::Propagated) groups_[{n.depth - b.depth, n.path.back()}].ids.push_back(id);
      stack.insert(stack.end(), n.children.begin(), n.children.end());
    }
    for (auto& [key, g] : groups_) std::sort(g.ids.begin(), g.ids.end());
    reuse_depth_ = std::min(cfg.L - 1, prev.L - b.depth);
  }

  PlanningTree run(const BeliefPtr& posterior, bool wildfire_root) {
    PlanningTree tree;
    tree.kind = ml_ ? TreeKind::IML : TreeKind::IXBSP;
    tree.k = posterior->label.t;
    tree.L = cfg_.L;
    tree.actions = cfg_.actions;
    if (wildfire_root) {
      TreeNode r = prev_.nodes[branch_];
      r.id = 0;
      r.parent = -1;
      r.depth = 0;
      r.kind = NodeKind::Root;
      r.children.clear();
      r.path.clear();
      r.action.reset();
      r.sample.reset();
      r.wildfire = true;
      r.origin = Origin::ReusedWildfire;
      r.source = branch_;
      tree.nodes.push_back(std::move(r));
    } else {
      TreeNode r = detail::root_node(posterior);
      r.source = branch_;
      tree.nodes.push_back(std::move(r));
    }

    std::vector<int> frontier{0};
    const int nu = cfg_.n_u();
    for (int depth = 0; depth < cfg_.L; ++depth) {
      const auto t0 = Clock::now();
      const bool reuse = depth < reuse_depth_;
      const int jobs = static_cast<int>(frontier.size()) * nu;
      std::vector<detail::Expansion> parts(jobs);
      std::vector<TreeNode> props(jobs);
      std::vector<bool> matched(jobs, false);

      if (reuse) {
        detail::parallel_for(jobs, opt_.parallel, [&](int j) {
          const TreeNode& f = tree.nodes[frontier[j / nu]];
          if (f.wildfire) return;
          auto it = groups_.find({depth + 1, j % nu});
          if (it == groups_.end() || it->second.ids.empty()) return;
          props[j] = detail::make_prop_node(f, j % nu, cfg_);
          matched[j] = true;
        });
        prepare_groups(depth, props, matched);
      }

      detail::parallel_for(jobs, opt_.parallel, [&](int j) {
        const TreeNode& f = tree.nodes[frontier[j / nu]];
        const int a = j % nu;
        if (f.wildfire && reuse && f.source >= 0 && a < static_cast<int>(prev_.nodes[f.source].children.size())) {
          parts[j] = copy_wildfire(f, a);
        } else if (matched[j]) {
          parts[j] = expand_matched(f, std::move(props[j]), depth);
        } else {
          parts[j] = detail::expand_fresh(f, a, cfg_, ml_, true);
        }
      });

      const int first = static_cast<int>(tree.nodes.size());
      detail::append(tree, parts);
      frontier.clear();
      for (int id = first; id < static_cast<int>(tree.nodes.size()); ++id)
        if (tree.nodes[id].kind == NodeKind::Posterior) frontier.push_back(id);
      tree.level_ms.push_back(ms_since(t0));
    }
    tree.stats.solves = tree.stats.fresh + tree.stats.reused;
    return tree;
  }

 private:
  void prepare_groups(int depth, const std::vector<TreeNode>& props, const std::vector<bool>& matched) {
    const int nu = cfg_.n_u();
    std::vector<std::pair<Group*, int>> work;
    for (int a = 0; a < nu; ++a) {
      auto it = groups_.find({depth + 1, a});
      if (it == groups_.end()) continue;
      const GaussianBelief* rep = nullptr;
      for (size_t j = a; j < props.size(); j += nu)
        if (matched[j]) {
          rep = props[j].belief.get();
          break;
        }
      if (!rep) continue;
      Group& g = it->second;
      g.common = common_vars(*rep, g.ids, prev_);
      g.margs.assign(g.ids.size(), nullptr);
      for (int c = 0; c < static_cast<int>(g.ids.size()); ++c) work.push_back({&g, c});
    }
    detail::parallel_for(static_cast<int>(work.size()), opt_.parallel, [&](int w) {
      auto [g, c] = work[w];
      g->margs[c] = std::make_shared<const GaussianBelief>(marginal(*prev_.nodes[g->ids[c]].belief, g->common));
    });
  }

  detail::Expansion copy_wildfire(const TreeNode& f, int a) const {
    const TreeNode& src = prev_.nodes[prev_.nodes[f.source].children[a]];
    detail::Expansion e;
    e.prop = src;
    e.prop.parent = f.id;
    e.prop.depth = f.depth + 1;
    e.prop.path = f.path;
    e.prop.path.push_back(a);
    e.prop.wildfire = true;
    e.prop.origin = Origin::ReusedWildfire;
    e.prop.source = src.id;
    for (size_t s = 0; s < src.children.size(); ++s) e.posts.push_back(wildfire_child(e.prop, src.children[s], s));
    return e;
  }

  TreeNode wildfire_child(const TreeNode& prop, int archived, size_t slot) const {
    TreeNode n = prev_.nodes[archived];
    n.depth = prop.depth;
    n.path = prop.path;
    n.path.push_back(static_cast<int>(slot));
    n.wildfire = true;
    n.origin = Origin::ReusedWildfire;
    n.source = archived;
    n.reused = true;
    n.log_p = n.log_q = 0.0;
    return n;
  }

  detail::Expansion expand_matched(const TreeNode& parent, TreeNode prop, int depth) const {
    const Group& g = groups_.at({depth + 1, prop.path.back()});
    const PropagatedBelief pb = detail::as_propagated(prop);

    int best = 0;
    double sqrtj = 0.0;
    if (has_all(pb, g.common)) {
      const GaussianBelief target = marginal(pb, g.common);
      const auto [d, i] = closest_belief(g.margs, target, cfg_.distance);
      best = i;
      sqrtj = cfg_.distance == DistanceKind::SqrtJ ? d.value : d_sqrt_j(*g.margs[i], target);
    } else {
      std::vector<BeliefPtr> full;
      for (int id : g.ids) full.push_back(prev_.nodes[id].belief);
      const auto [d, i] = closest_belief(full, pb, cfg_.distance);
      best = i;
      sqrtj = d_sqrt_j(*full[i], pb);
    }
    const TreeNode& cand = prev_.nodes[g.ids[best]];
    prop.source = cand.id;
    prop.match_dist = sqrtj;

    detail::Expansion e;
    if (sqrtj > cfg_.eps_c) {
      e = fresh_with(parent, std::move(prop));
    } else if (cfg_.use_wf && sqrtj <= cfg_.eps_wf) {
      e.prop = std::move(prop);
      for (size_t s = 0; s < cand.children.size(); ++s) e.posts.push_back(wildfire_child(e.prop, cand.children[s], s));
    } else {
      e = reuse_samples(parent, std::move(prop), cand);
    }
    for (auto& p : e.posts) p.match_dist = sqrtj;
    return e;
  }

  detail::Expansion fresh_with(const TreeNode& parent, TreeNode prop) const {
    detail::Expansion e;
    e.prop = std::move(prop);
    const PropagatedBelief pb = detail::as_propagated(e.prop);
    std::vector<MeasurementSample> samples;
    if (ml_) {
      samples.push_back(most_likely_measurement(pb, cfg_.models.meas));
    } else {
      Rng rng(stream_seed(cfg_.seed, e.prop.path));
      samples = sample_future_measurements(pb, cfg_.models.meas, cfg_.n_x, cfg_.n_z, rng, cfg_.sample_landmarks);
    }
    for (size_t s = 0; s < samples.size(); ++s)
      e.posts.push_back(detail::make_post_node(e.prop, pb, parent, std::move(samples[s]), static_cast<int>(s), cfg_, true));
    return e;
  }

  detail::Expansion reuse_samples(const TreeNode& parent, TreeNode prop, const TreeNode& cand) const {
    detail::Expansion e;
    e.prop = std::move(prop);
    const PropagatedBelief pb = detail::as_propagated(e.prop);
    const GaussianBelief& archived_prop = *cand.belief;

    std::vector<MeasurementSample> old;
    for (int c : cand.children) {
      const TreeNode& n = prev_.nodes[c];
      if (!n.sample) throw Error(ErrorKind::IncompleteRecord, "archived node without sample");
      old.push_back(*n.sample);
    }
    std::vector<RepSample> reps;
    if (ml_) {
      // The archived sample stays only while the state it was predicted from is representative;
      // otherwise the nominal most likely measurement replaces it.
      for (size_t s = 0; s < old.size(); ++s) {
        if (is_representative(old[s].state, pb, cfg_.beta_sigma, cfg_.rep_test))
          reps.push_back({old[s], true, static_cast<int>(s)});
        else
          reps.push_back({most_likely_measurement(pb, cfg_.models.meas), false, -1});
      }
    } else {
      Rng rng(stream_seed(cfg_.seed, e.prop.path));
      reps = is_rep_sample(old, pb, cfg_, rng);
    }

    for (size_t s = 0; s < reps.size(); ++s) {
      RepSample& r = reps[s];
      TreeNode n;
      if (r.reused) {
        const TreeNode& src = prev_.nodes[cand.children[r.origin_slot]];
        History target = pb.history;
        Step& last = target.steps.back();
        last.measured = true;
        last.z = r.sample.z;
        last.da = r.sample.da;
        FactorStats fs;
        n.kind = NodeKind::Posterior;
        n.depth = e.prop.depth;
        n.action = e.prop.action;
        n.path = e.prop.path;
        n.path.push_back(static_cast<int>(s));
        // Nothing observed: the posterior is the propagated belief itself.
        if (r.sample.z.empty())
          n.belief = std::make_shared<const GaussianBelief>(
              update_with_measurements(pb, r.sample.z, r.sample.da, cfg_.models));
        else
          n.belief = std::make_shared<const GaussianBelief>(incremental_update(
              *src.belief, target, cfg_.models, &fs, {prev_.nodes[cand.parent].belief.get(), parent.belief.get()}));
        n.reward = reward(*n.belief, *parent.belief, cfg_.reward);
        n.origin = Origin::ReusedUpdated;
        n.reused = true;
        n.source = src.id;
        r.sample.dist = {prev_.k, cand.id, DistKind::Reused};
        n.log_p = measurement_likelihood_density(r.sample.z, pb, cfg_.models.meas, r.sample.da);
        n.sample = std::move(r.sample);
        e.factors.existing += fs.existing;
        e.factors.reused += fs.reused;
        e.factors.revalued += fs.revalued;
        e.factors.removed += fs.removed;
        e.factors.added += fs.added;
      } else {
        n = detail::make_post_node(e.prop, pb, parent, std::move(r.sample), static_cast<int>(s), cfg_, true);
        ++e.resampled;
      }
      // A landmark unknown to the archived belief could never have been drawn from it.
      bool drawable = true;
      for (const auto& [t, id] : n.sample->da.entries)
        if (id != kDirect && !archived_prop.has(VariableId::landmark(id))) drawable = false;
      n.log_q = drawable ? measurement_likelihood_density(n.sample->z, archived_prop, cfg_.models.meas, n.sample->da)
                         : -std::numeric_limits<double>::infinity();
      e.posts.push_back(std::move(n));
    }
    return e;
  }

  const PlanningTree& prev_;
  int branch_;
  const ScenarioConfig& cfg_;
  bool ml_;
  BuildOptions opt_;
  std::map<std::pair<int, int>, Group> groups_;
  int reuse_depth_ = 0;
};

}  // namespace

PlanningTree inc_update_belief_tree(const PlanningTree& archive, int branch_root, const BeliefPtr& posterior,
                                    const ScenarioConfig& cfg, bool wildfire_root, const BuildOptions& opt) {
  cfg.check();
  if (branch_root < 0 || branch_root >= static_cast<int>(archive.nodes.size()) ||
      archive.nodes[branch_root].kind == NodeKind::Propagated)
    throw Error(ErrorKind::IncompatibleTrees, "branch root is not a belief node");
  const bool ml = archive.kind == TreeKind::ML || archive.kind == TreeKind::IML;
  ScenarioConfig c = cfg;
  if (ml) c.n_x = c.n_z = 1;
  TreeUpdater up(archive, branch_root, c, ml, opt);
  return up.run(posterior, wildfire_root);
}

double PlanResult::total_ms() const {
  double t = select_ms;
  for (double x : tree.level_ms) t += x;
  return t;
}

double PlanResult::overlap_ms() const {
  return tree.level_ms.empty() ? select_ms : total_ms() - tree.level_ms.back();
}

namespace {

PlanResult finish(PlanningTree tree) {
  PlanResult r;
  r.choice = best_action(tree);
  r.tree = std::move(tree);
  return r;
}

PlanResult plan_incremental(const PlanningArchive* archive, const BeliefPtr& posterior, const ScenarioConfig& cfg,
                            const BuildOptions& opt, bool ml) {
  const TreeKind kind = ml ? TreeKind::IML : TreeKind::IXBSP;
  auto fresh = [&] {
    PlanningTree t = ml ? build_tree_ml(posterior, cfg, opt) : build_tree_xbsp(posterior, cfg, opt);
    t.kind = kind;
    return t;
  };
  if (!archive || !archive->tree) return finish(fresh());
  const bool archived_ml = archive->tree->kind == TreeKind::ML || archive->tree->kind == TreeKind::IML;
  if (archived_ml != ml) throw Error(ErrorKind::IncompatibleTrees, "archive built by a different planner family");

  const auto t0 = Clock::now();
  const BranchSelection sel = select_closest_branch(*archive, *posterior, cfg);
  const double select_ms = ms_since(t0);

  PlanResult r;
  if (sel.sqrtj > cfg.eps_c) {
    r = finish(fresh());
    r.fallback = true;
  } else {
    const bool wf = cfg.use_wf && sel.sqrtj <= cfg.eps_wf;
    r = finish(inc_update_belief_tree(*archive->tree, sel.node, posterior, cfg, wf, opt));
    r.branch_wildfire = wf;
  }
  r.branch_dist = sel.sqrtj;
  r.select_ms = select_ms;
  return r;
}

}  // namespace

PlanResult plan_xbsp(const BeliefPtr& posterior, const ScenarioConfig& cfg, const BuildOptions& opt) {
  return finish(build_tree_xbsp(posterior, cfg, opt));
}

PlanResult plan_ml(const BeliefPtr& posterior, const ScenarioConfig& cfg, const BuildOptions& opt) {
  return finish(build_tree_ml(posterior, cfg, opt));
}

PlanResult plan_ixbsp(const PlanningArchive* archive, const BeliefPtr& posterior, const ScenarioConfig& cfg,
                      const BuildOptions& opt) {
  return plan_incremental(archive, posterior, cfg, opt, false);
}

PlanResult plan_iml(const PlanningArchive* archive, const BeliefPtr& posterior, const ScenarioConfig& cfg,
                    const BuildOptions& opt) {
  return plan_incremental(archive, posterior, cfg, opt, true);
}

}  // namespace ixbsp
