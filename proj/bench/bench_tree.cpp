// Serial reference against the OpenMP tree build, plus one incremental session.
#include "ixbsp/incremental.hpp"

#include <benchmark/benchmark.h>

#include <omp.h>

using namespace ixbsp;

namespace {

BeliefPtr prior(int landmarks) {
  std::vector<VariableId> index{VariableId::pose(0)};
  VectorXd mean = VectorXd::Zero(3 + 2 * landmarks);
  for (int i = 0; i < landmarks; ++i) {
    index.push_back(VariableId::landmark(i));
    mean.segment(3 + 2 * i, 2) = Eigen::Vector2d(4.0 + i, (i % 2 ? 2.0 : -2.0));
  }
  MatrixXd cov = 0.25 * MatrixXd::Identity(mean.size(), mean.size());
  cov(2, 2) = 1e-3;
  return std::make_shared<const GaussianBelief>(GaussianBelief::from_covariance(index, mean, cov, {0, 0}));
}

ScenarioConfig scenario(int n_x) {
  ScenarioConfig cfg;
  cfg.n_x = n_x;
  cfg.L = 3;
  cfg.reward.goal = Eigen::Vector2d(8.0, 2.0);
  return cfg;
}

void BM_TreeSerial(benchmark::State& st) {
  const BeliefPtr p = prior(6);
  const ScenarioConfig cfg = scenario(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(build_tree_xbsp(p, cfg, {false}));
}

void BM_TreeParallel(benchmark::State& st) {
  const BeliefPtr p = prior(6);
  const ScenarioConfig cfg = scenario(static_cast<int>(st.range(0)));
  st.counters["threads"] = omp_get_max_threads();
  for (auto _ : st) benchmark::DoNotOptimize(build_tree_xbsp(p, cfg, {true}));
}

// One planning session after a step, fresh against reused.
void BM_Session(benchmark::State& st) {
  const BeliefPtr p0 = prior(6);
  ScenarioConfig cfg = scenario(3);
  const PlanResult r0 = plan_xbsp(p0, cfg);
  const int a = r0.choice.sequence.front();
  const GaussianBelief& b = *r0.tree.nodes[r0.tree.nodes[r0.tree.nodes[0].children[a]].children[0]].belief;
  std::vector<VariableId> keep;
  for (const auto& v : b.index)
    if (!v.is_robot() || v == b.robot_var()) keep.push_back(v);
  GaussianBelief f = marginal(b, keep);
  f.label = {1, 1};
  const BeliefPtr p1 = std::make_shared<const GaussianBelief>(std::move(f));
  PlanningArchive archive{std::make_shared<const PlanningTree>(r0.tree), {a}};
  cfg.use_wf = false;
  const bool incremental = st.range(0) != 0;
  for (auto _ : st)
    benchmark::DoNotOptimize(incremental ? plan_ixbsp(&archive, p1, cfg) : plan_xbsp(p1, cfg));
}

}  // namespace

BENCHMARK(BM_TreeSerial)->Arg(2)->Arg(5)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TreeParallel)->Arg(2)->Arg(5)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Session)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
