#include "support.hpp"

#include "ixbsp/errors.hpp"
#include "ixbsp/incremental.hpp"

#include <doctest.h>

#include <numbers>

using namespace testing;

namespace {

ScenarioConfig deep_config(std::uint64_t seed) {
  ScenarioConfig cfg = small_slam_config(seed);
  cfg.L = 3;
  return cfg;
}

// Rebuilds a node's belief by chaining propagate and update from the root along its samples.
GaussianBelief from_scratch(const PlanningTree& t, int id, const Models& models) {
  std::vector<const TreeNode*> chain;
  for (int n = id; n > 0; n = t.nodes[n].parent)
    if (t.nodes[n].kind == NodeKind::Posterior) chain.push_back(&t.nodes[n]);
  GaussianBelief b = *t.nodes[0].belief;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    const TreeNode& n = **it;
    const PropagatedBelief p = propagate(b, *n.action, models.motion);
    b = update_with_measurements(p, n.sample->z, n.sample->da, models);
  }
  return b;
}

}  // namespace

TEST_CASE("empty archive reproduces the fresh planners") {
  Rng rng(41);
  const BeliefPtr prior = slam_prior(rng, 3);
  const ScenarioConfig cfg = deep_config(4);
  const PlanResult ml = plan_ml(prior, cfg);
  const PlanResult iml = plan_iml(nullptr, prior, cfg);
  REQUIRE(ml.tree.nodes.size() == iml.tree.nodes.size());
  for (std::size_t i = 0; i < ml.tree.nodes.size(); ++i) {
    CHECK(ml.tree.nodes[i].belief->mean == iml.tree.nodes[i].belief->mean);
    CHECK(ml.tree.nodes[i].reward == iml.tree.nodes[i].reward);
  }
  CHECK(ml.choice.sequence == iml.choice.sequence);

  const PlanResult x = plan_xbsp(prior, cfg);
  const PlanResult ix = plan_ixbsp(nullptr, prior, cfg);
  CHECK(x.choice.sequence == ix.choice.sequence);
  CHECK(x.choice.value == ix.choice.value);
  CHECK(ix.branch_dist < 0.0);
}

TEST_CASE("reused tree matches inference from scratch on its own samples") {
  Rng rng(42);
  const BeliefPtr p0 = slam_prior(rng, 4);
  ScenarioConfig cfg = deep_config(7);
  cfg.use_wf = false;
  const PlanResult r0 = plan_xbsp(p0, cfg);
  const int a = r0.choice.sequence.front();
  const BeliefPtr p1 = advance(p0, cfg.actions[a], cfg.models, rng);
  PlanningArchive archive{std::make_shared<const PlanningTree>(r0.tree), {a}};
  cfg.seed = 8;
  const PlanResult r1 = plan_ixbsp(&archive, p1, cfg);
  REQUIRE_FALSE(r1.fallback);
  CHECK(r1.tree.stats.reused > 0);
  CHECK(r1.tree.stats.wildfire == 0);

  PlanningTree rescored = r1.tree;
  for (const TreeNode& n : r1.tree.nodes) {
    if (n.kind != NodeKind::Posterior) continue;
    const GaussianBelief scratch = from_scratch(r1.tree, n.id, cfg.models);
    const GaussianBelief mine = marginal(*n.belief, scratch.index);
    CHECK((mine.mean - scratch.mean).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((mine.cov - scratch.cov).cwiseAbs().maxCoeff() < 1e-6);
    const TreeNode& grand = r1.tree.nodes[r1.tree.nodes[n.parent].parent];
    const GaussianBelief gb = grand.kind == NodeKind::Root ? *grand.belief : from_scratch(r1.tree, grand.id, cfg.models);
    rescored.nodes[n.id].reward = reward(scratch, gb, cfg.reward);
  }
  for (int q = 0; q < r1.tree.sequence_count(); ++q) {
    const auto seq = r1.tree.sequence(q);
    CHECK(std::abs(tree_objective(r1.tree, seq) - tree_objective(rescored, seq)) < 1e-9);
  }
}

TEST_CASE("wildfire adopts the archived branch verbatim at zero distance") {
  Rng rng(43);
  const BeliefPtr p0 = slam_prior(rng, 4);
  ScenarioConfig cfg = deep_config(9);
  cfg.eps_wf = 0.0;
  const PlanResult r0 = plan_xbsp(p0, cfg);
  const PlanningTree& t0 = r0.tree;
  const int a = 1;
  const int branch = t0.nodes[t0.nodes[0].children[a]].children[0];

  // The realised posterior equals the archived sample path.
  const GaussianBelief& bb = *t0.nodes[branch].belief;
  std::vector<VariableId> keep;
  for (const auto& v : bb.index)
    if (!v.is_robot() || v == bb.robot_var()) keep.push_back(v);
  GaussianBelief f = marginal(bb, keep);
  f.label = {1, 1};
  const BeliefPtr p1 = std::make_shared<const GaussianBelief>(f);

  PlanningArchive archive{std::make_shared<const PlanningTree>(t0), {a}};
  cfg.seed = 10;
  const PlanResult r1 = plan_ixbsp(&archive, p1, cfg);
  CHECK(r1.branch_dist == 0.0);
  CHECK(r1.branch_wildfire);
  const PlanningTree& t1 = r1.tree;

  for (int q = 0; q < t1.sequence_count(); ++q) {
    const auto seq = t1.sequence(q);
    std::vector<int> now{0}, then{branch};
    for (int i = 0; i + 1 < t1.L; ++i) {
      std::vector<int> nn, tt;
      double sn = 0.0, st = 0.0;
      for (int id : now)
        for (int c : t1.nodes[t1.nodes[id].children[seq[i]]].children) {
          nn.push_back(c);
          sn += t1.nodes[c].reward;
          CHECK(t1.nodes[c].wildfire);
        }
      for (int id : then)
        for (int c : t0.nodes[t0.nodes[id].children[seq[i]]].children) {
          tt.push_back(c);
          st += t0.nodes[c].reward;
        }
      REQUIRE(nn.size() == tt.size());
      CHECK(sn / double(nn.size()) == st / double(tt.size()));
      now = nn;
      then = tt;
    }
  }
}

TEST_CASE("closest branch at zero distance") {
  Rng rng(44);
  const BeliefPtr p0 = slam_prior(rng, 3);
  const ScenarioConfig cfg = deep_config(11);
  const PlanResult r0 = plan_xbsp(p0, cfg);
  const int target = r0.tree.posterior_nodes(1)[4];
  const std::vector<int> executed{r0.tree.nodes[target].path[0]};
  PlanningArchive archive{std::make_shared<const PlanningTree>(r0.tree), executed};
  const BranchSelection s = select_closest_branch(archive, *r0.tree.nodes[target].belief, cfg);
  CHECK(s.node == target);
  CHECK(s.sqrtj == 0.0);
  archive.executed = {0, 0, 0};
  CHECK_THROWS_AS(select_closest_branch(archive, *p0, cfg), Error);
}

TEST_CASE("archives of the other family are refused") {
  Rng rng(45);
  const BeliefPtr p0 = slam_prior(rng, 3);
  const ScenarioConfig cfg = deep_config(12);
  const PlanResult ml = plan_ml(p0, cfg);
  const BeliefPtr p1 = advance(p0, cfg.actions[0], cfg.models, rng);
  PlanningArchive archive{std::make_shared<const PlanningTree>(ml.tree), {0}};
  CHECK_THROWS_AS(plan_ixbsp(&archive, p1, cfg), Error);
}

TEST_CASE("representative sample test") {
  const MatrixXd S = Eigen::Vector3d(1.0, 4.0, 0.01).asDiagonal();
  const GaussianBelief prop = GaussianBelief::from_covariance({VariableId::pose(1)}, Eigen::Vector3d(1, 2, 0), S);
  StateSample chi;
  chi.index = prop.index;
  chi.chi = Eigen::Vector3d(2.4, 2.0, 0.0);
  CHECK(is_representative(chi, prop, 1.5, RepTest::PerCoordinate));
  chi.chi = Eigen::Vector3d(2.6, 2.0, 0.0);
  CHECK_FALSE(is_representative(chi, prop, 1.5, RepTest::PerCoordinate));
  // Mahalanobis: 1.6^2 + 0 + 0 <= 1.5^2 * 3.
  CHECK(is_representative(chi, prop, 1.5, RepTest::Mahalanobis));
  chi.chi = Eigen::Vector3d(1.0, 2.0, 2.0 * std::numbers::pi);
  CHECK(is_representative(chi, prop, 1.5, RepTest::PerCoordinate));
}

TEST_CASE("representative filtering keeps groups together") {
  Rng rng(46);
  const Models models = ScenarioConfig::default_models();
  ScenarioConfig cfg = deep_config(13);
  cfg.n_z = 2;
  const BeliefPtr p0 = slam_prior(rng, 3);
  const PropagatedBelief prop = propagate(rebase(p0), cfg.actions[0], models.motion);
  auto samples = sample_future_measurements(prop, models.meas, 4, 2, rng);
  // Push the second state far away so its whole group is redrawn.
  const int o = prop.offset(prop.robot_var());
  for (int s = 2; s < 4; ++s) samples[s].state.chi[o] += 100.0;
  const auto out = is_rep_sample(samples, prop, cfg, rng);
  REQUIRE(out.size() == 8);
  CHECK_FALSE(out[2].reused);
  CHECK_FALSE(out[3].reused);
  CHECK(out[2].sample.state.chi == out[3].sample.state.chi);
  for (int s : {0, 1, 4, 5, 6, 7})
    if (out[s].reused) CHECK(out[s].origin_slot == s);
}

TEST_CASE("iml swaps unrepresentative samples for the most likely measurement") {
  Rng rng(47);
  const BeliefPtr p0 = slam_prior(rng, 3);
  ScenarioConfig cfg = deep_config(14);
  cfg.use_wf = false;
  const PlanResult r0 = plan_ml(p0, cfg);
  const int a = r0.choice.sequence.front();
  const BeliefPtr p1 = advance(p0, cfg.actions[a], cfg.models, rng);
  PlanningArchive archive{std::make_shared<const PlanningTree>(r0.tree), {a}};
  cfg.beta_sigma = 1e-9;
  const PlanResult iml = plan_iml(&archive, p1, cfg);
  REQUIRE_FALSE(iml.fallback);
  CHECK(iml.tree.stats.reused == 0);
  CHECK(iml.tree.stats.resampled > 0);
  const PlanResult ml = plan_ml(p1, cfg);
  CHECK(iml.choice.sequence == ml.choice.sequence);
  for (int q = 0; q < ml.tree.sequence_count(); ++q)
    CHECK(tree_objective(iml.tree, ml.tree.sequence(q)) ==
          doctest::Approx(tree_objective(ml.tree, ml.tree.sequence(q))).epsilon(1e-9));
}
