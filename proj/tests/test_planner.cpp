#include "support.hpp"

#include "ixbsp/errors.hpp"
#include "ixbsp/planner.hpp"

#include <doctest.h>

using namespace testing;

namespace {

bool same_tree(const PlanningTree& a, const PlanningTree& b) {
  if (a.nodes.size() != b.nodes.size()) return false;
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    const TreeNode& x = a.nodes[i];
    const TreeNode& y = b.nodes[i];
    if (x.parent != y.parent || x.path != y.path || x.reward != y.reward) return false;
    if (x.belief->mean != y.belief->mean || x.belief->cov != y.belief->cov) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("x-bsp tree shape") {
  Rng rng(31);
  const ScenarioConfig cfg = small_slam_config(3);
  const PlanningTree t = build_tree_xbsp(slam_prior(rng, 3), cfg);
  // Per depth: n_u^i * n_x^i posteriors and n_u^i * n_x^(i-1) propagated beliefs.
  CHECK(t.posterior_nodes(1).size() == 6);
  CHECK(t.posterior_nodes(2).size() == 36);
  CHECK(t.belief_count() == 6 + 36 + 3 + 18);
  CHECK(t.sequence_count() == 9);
  CHECK(t.sequence(5) == std::vector<int>{1, 2});
  CHECK_THROWS_AS(t.sequence(9), Error);
}

TEST_CASE("ml tree keeps one measurement per action") {
  Rng rng(32);
  const PlanningTree t = build_tree_ml(slam_prior(rng, 3), small_slam_config(3));
  CHECK(t.posterior_nodes(1).size() == 3);
  CHECK(t.posterior_nodes(2).size() == 9);
}

TEST_CASE("parallel and serial construction agree bit for bit") {
  Rng rng(33);
  const BeliefPtr prior = slam_prior(rng, 4);
  const ScenarioConfig cfg = small_slam_config(9);
  const PlanningTree par = build_tree_xbsp(prior, cfg, {true});
  const PlanningTree ser = build_tree_xbsp(prior, cfg, {false});
  CHECK(same_tree(par, ser));
  CHECK(best_action(par).index == best_action(ser).index);
}

TEST_CASE("same seed gives the same tree, another seed a different one") {
  Rng rng(34);
  const BeliefPtr prior = slam_prior(rng, 3);
  const PlanningTree a = build_tree_xbsp(prior, small_slam_config(5));
  const PlanningTree b = build_tree_xbsp(prior, small_slam_config(5));
  const PlanningTree c = build_tree_xbsp(prior, small_slam_config(6));
  CHECK(same_tree(a, b));
  CHECK_FALSE(same_tree(a, c));
}

TEST_CASE("objective is the per-depth sample average") {
  Rng rng(35);
  const PlanningTree t = build_tree_xbsp(slam_prior(rng, 3), small_slam_config(2));
  for (int q = 0; q < t.sequence_count(); ++q) {
    const auto seq = t.sequence(q);
    // Walk the tree by hand.
    double want = 0.0;
    std::vector<int> frontier{0};
    for (int i = 0; i < t.L; ++i) {
      std::vector<int> next;
      double sum = 0.0;
      for (int id : frontier)
        for (int post : t.nodes[t.nodes[id].children[seq[i]]].children) {
          next.push_back(post);
          sum += t.nodes[post].reward;
        }
      want += sum / double(next.size());
      frontier = next;
    }
    CHECK(objective(t, seq) == doctest::Approx(want).epsilon(1e-14));
    CHECK(tree_objective(t, seq) == objective(t, seq));
  }
}

TEST_CASE("best action takes the lowest index on ties") {
  Rng rng(36);
  const PlanningTree t = build_tree_ml(slam_prior(rng, 2), small_slam_config(1));
  const Choice c = best_of({1.0, 3.0, 3.0, 0.0, 3.0, 1.0, 0.0, 0.0, 0.0}, t);
  CHECK(c.index == 1);
  CHECK(c.value == 3.0);
  CHECK_THROWS_AS(best_of({}, t), Error);
}

TEST_CASE("reward progress term") {
  RewardSpec spec;
  spec.alpha = 0.0;
  spec.goal = Eigen::Vector2d(10.0, 0.0);
  const MatrixXd S = MatrixXd::Identity(3, 3);
  const GaussianBelief before = GaussianBelief::from_covariance({VariableId::pose(0)}, Eigen::Vector3d(0, 0, 0), S);
  const GaussianBelief after = GaussianBelief::from_covariance({VariableId::pose(1)}, Eigen::Vector3d(3, 0, 0), S);
  CHECK(reward(after, before, spec) == doctest::Approx(3.0));
  spec.alpha = 1.5;
  CHECK_THROWS_AS(reward(after, before, spec), Error);
}

TEST_CASE("unknown sequences are rejected") {
  Rng rng(37);
  const PlanningTree t = build_tree_ml(slam_prior(rng, 2), small_slam_config(1));
  CHECK_THROWS_AS(objective(t, std::vector<int>{0}), Error);
  CHECK_THROWS_AS(objective(t, std::vector<int>{0, 3}), Error);
}
