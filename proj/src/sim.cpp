#include "ixbsp/sim.hpp"

#include "ixbsp/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>

namespace ixbsp {

using nlohmann::json;

namespace {

VectorXd gaussian_draw(const MatrixXd& cov, Rng& rng) {
  std::normal_distribution<double> n01;
  VectorXd e(cov.rows());
  for (int i = 0; i < e.size(); ++i) e[i] = n01(rng);
  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) return VectorXd::Zero(cov.rows());  // zero or singular noise
  return llt.matrixL() * e;
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) { return splitmix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6))); }

std::uint64_t bits(double x) {
  std::uint64_t u;
  std::memcpy(&u, &x, sizeof u);
  return u;
}

std::string join(const std::vector<int>& v, char sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += std::to_string(v[i]);
  }
  return s;
}

// Robot pose plus every landmark, in the belief's own order.
std::vector<VariableId> filter_vars(const GaussianBelief& b) {
  const VariableId rv = b.robot_var();
  std::vector<VariableId> out;
  for (const auto& v : b.index)
    if (!v.is_robot() || v == rv) out.push_back(v);
  return out;
}

std::set<int> unseen(const GaussianBelief& b, const MeasurementSet& z) {
  std::set<int> out;
  for (const auto& [id, _] : z)
    if (id != kDirect && !b.has(VariableId::landmark(id))) out.insert(id);
  return out;
}

BeliefPtr filtered(const GaussianBelief& post, int t) {
  GaussianBelief b = marginal(post, filter_vars(post));
  b.label = {t, t};
  return std::make_shared<const GaussianBelief>(std::move(b));
}

PlanResult plan_with(const PlannerSpec& spec, const PlanningArchive* archive, const BeliefPtr& posterior,
                     ScenarioConfig cfg, const BuildOptions& opt) {
  switch (spec.kind) {
    case PlannerKind::XBSP:
      return plan_xbsp(posterior, cfg, opt);
    case PlannerKind::MLBSP:
      return plan_ml(posterior, cfg, opt);
    case PlannerKind::IXBSP:
      cfg.use_wf = cfg.use_wf && spec.wildfire;
      return plan_ixbsp(archive, posterior, cfg, opt);
    case PlannerKind::IMLBSP:
      cfg.use_wf = cfg.use_wf && spec.wildfire;
      return plan_iml(archive, posterior, cfg, opt);
  }
  throw Error(ErrorKind::InvalidInput, "unknown planner");
}

struct Lane {
  PlannerSpec spec;
  std::optional<PlanningArchive> archive;
  RolloutMetrics metrics;
};

}  // namespace

std::uint64_t WorldModel::hash() const {
  std::uint64_t h = mix(bits(width), bits(height));
  for (const auto& [id, p] : landmarks) h = mix(mix(mix(h, std::uint64_t(id)), bits(p.x())), bits(p.y()));
  for (const auto& g : goals) h = mix(mix(h, bits(g.x())), bits(g.y()));
  return h;
}

WorldModel generate_world(std::uint64_t seed, const WorldSpec& spec) {
  if (spec.min_landmarks < 0 || spec.min_landmarks > spec.max_landmarks || spec.goals < 1)
    throw Error(ErrorKind::InvalidInput, "bad world spec");
  Rng rng(splitmix64(seed));
  WorldModel w;
  w.width = spec.width;
  w.height = spec.height;
  std::uniform_int_distribution<int> count(spec.min_landmarks, spec.max_landmarks);
  std::uniform_real_distribution<double> ux(-0.5 * spec.width, 0.5 * spec.width);
  std::uniform_real_distribution<double> uy(-0.5 * spec.height, 0.5 * spec.height);
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    const double x = ux(rng);
    w.landmarks.emplace_back(i, Eigen::Vector2d(x, uy(rng)));
  }
  for (int i = 0; i < spec.goals; ++i) {
    const double x = ux(rng);
    w.goals.emplace_back(x, uy(rng));
  }
  return w;
}

StepOutcome sense_world(const VectorXd& gt, const WorldModel& world, const Models& models, Rng& rng, int time) {
  StepOutcome out;
  out.pose = gt;
  const MatrixXd R = models.meas.noise();
  if (models.meas.linear()) {
    out.z[kDirect] = models.meas.predict_direct(gt) + gaussian_draw(R, rng);
    out.da.entries.insert({time, kDirect});
    return out;
  }
  for (const auto& [id, lm] : world.landmarks) {
    if (!models.meas.visible(gt, lm)) continue;
    VectorXd z = models.meas.predict(gt, lm) + gaussian_draw(R, rng);
    z[1] = wrap_angle(z[1]);
    out.z[id] = std::move(z);
    out.da.entries.insert({time, id});
  }
  return out;
}

StepOutcome simulate_step(const VectorXd& gt, const ActionId& action, const WorldModel& world, const Models& models,
                          Rng& rng, int time) {
  VectorXd next = models.motion.apply(gt, action) + gaussian_draw(models.motion.noise(), rng);
  if (!models.motion.linear()) next[2] = wrap_angle(next[2]);
  return sense_world(next, world, models, rng, time);
}

double estimation_error(const GaussianBelief& final_belief, const VectorXd& gt_pose) {
  const VectorXd est = final_belief.robot_mean();
  if (est.size() < 2 || gt_pose.size() < 2) throw Error(ErrorKind::InvalidInput, "pose has no position");
  return (est.head(2) - gt_pose.head(2)).norm();
}

double position_cov_norm(const GaussianBelief& b) { return std::sqrt(b.robot_cov().topLeftCorner(2, 2).trace()); }

PlannerSpec parse_planner(const std::string& name) {
  PlannerSpec s;
  s.name = name;
  if (name == "xbsp") s.kind = PlannerKind::XBSP;
  else if (name == "ml" || name == "mlbsp") s.kind = PlannerKind::MLBSP;
  else if (name == "ixbsp") s.kind = PlannerKind::IXBSP;
  else if (name == "iml" || name == "imlbsp") s.kind = PlannerKind::IMLBSP;
  else if (name == "ixbsp-nowf") s = {PlannerKind::IXBSP, false, name};
  else if (name == "iml-nowf") s = {PlannerKind::IMLBSP, false, name};
  else throw Error(ErrorKind::ConfigError, "unknown planner '" + name + "'");
  return s;
}

double timed_ms(const PlanResult& r, TimingMode mode) {
  switch (mode) {
    case TimingMode::Full:
      return r.total_ms();
    case TimingMode::OverlapOnly:
      return r.overlap_ms();
    case TimingMode::None:
      return 0.0;
  }
  return 0.0;
}

std::vector<RolloutMetrics> run_rollout(const WorldModel& world, const PlannerSpec& driver, const SimConfig& cfg,
                                        std::uint64_t world_seed, std::uint64_t seed, const RolloutOptions& opt) {
  cfg.scenario.check();
  if (world.goals.empty()) throw Error(ErrorKind::InvalidInput, "world has no goals");
  const Models& models = cfg.scenario.models;

  std::vector<Lane> lanes;
  lanes.push_back({driver, std::nullopt, {}});
  for (const auto& s : opt.shadows) lanes.push_back({s, std::nullopt, {}});
  for (auto& l : lanes) {
    l.metrics.planner = l.spec.name;
    l.metrics.world_seed = world_seed;
    l.metrics.seed = seed;
  }

  // Ground truth drawn from the prior itself.
  const int d = models.motion.state_dim();
  const VectorXd prior_mean = VectorXd::Zero(d);
  const MatrixXd prior_cov = cfg.prior_sigma.head(d).cwiseAbs2().asDiagonal();
  Rng gt_rng(stream_seed(seed, {0}));
  VectorXd gt = prior_mean + gaussian_draw(prior_cov, gt_rng);
  if (!models.motion.linear()) gt[2] = wrap_angle(gt[2]);

  const VariableId v0 = models.motion.linear() ? VariableId::state(0, d) : VariableId::pose(0);
  auto prior = std::make_shared<const GaussianBelief>(GaussianBelief::from_covariance({v0}, prior_mean, prior_cov, {0, 0}));
  StepOutcome first = sense_world(gt, world, models, gt_rng, 0);
  BeliefPtr post = filtered(sense(rebase(prior), first.z, first.da, models, unseen(*prior, first.z)), 0);

  std::size_t goal = 0;
  auto goal_dist = [&](const GaussianBelief& b) { return (b.robot_mean().head(2) - world.goals[goal]).norm(); };
  auto advance_goals = [&] {
    while (goal < world.goals.size() && goal_dist(*post) <= cfg.world.goal_radius) {
      ++goal;
      for (auto& l : lanes) l.archive.reset();  // rewards were scored against the old goal
    }
  };
  advance_goals();

  int k = 0;
  bool timeout = false;
  while (goal < world.goals.size()) {
    if (k >= cfg.step_cap) {
      timeout = true;
      break;
    }
    ScenarioConfig sc = cfg.scenario;
    sc.seed = stream_seed(seed, {2, k});
    sc.reward.goal = world.goals[goal];

    int executed = 0;
    for (std::size_t li = 0; li < lanes.size(); ++li) {
      Lane& lane = lanes[li];
      PlanResult r = plan_with(lane.spec, lane.archive ? &*lane.archive : nullptr, post, sc, opt.build);
      SessionMetrics s;
      s.idx = k + 1;
      s.planner = lane.spec.name;
      s.wall_ms = timed_ms(r, cfg.timing);
      s.select_ms = cfg.timing == TimingMode::None ? 0.0 : r.select_ms;
      s.objective = r.choice.value;
      s.seq = r.choice.sequence;
      s.fresh = r.tree.stats.fresh;
      s.reused = r.tree.stats.reused;
      s.wildfire = r.tree.stats.wildfire;
      s.resampled = r.tree.stats.resampled;
      s.factors = r.tree.stats.factors;
      s.branch_dist = r.branch_dist;
      s.fallback = r.fallback;
      s.nodes = r.tree.belief_count();
      lane.metrics.cumulative_ms += s.wall_ms;
      s.cumulative_ms = lane.metrics.cumulative_ms;
      if (li == 0) executed = r.choice.sequence.front();
      auto tree = std::make_shared<const PlanningTree>(std::move(r.tree));
      lane.metrics.last_tree = tree;
      lane.metrics.sessions.push_back(std::move(s));
      if (lane.spec.incremental()) lane.archive = PlanningArchive{tree, {}};
    }

    // Act with the driver's first action, then infer.
    const ActionId& a = sc.actions.at(executed);
    Rng world_rng(stream_seed(seed, {1, k}));
    StepOutcome out = simulate_step(gt, a, world, models, world_rng, k + 1);
    gt = out.pose;
    const PropagatedBelief prop = propagate(rebase(post), a, models.motion);
    const GaussianBelief upd = update_with_measurements(prop, out.z, out.da, models, unseen(prop, out.z));
    post = filtered(upd, k + 1);
    ++k;

    for (auto& l : lanes) {
      if (l.archive) l.archive->executed = {executed};
      l.metrics.actions.push_back(executed);
      auto& s = l.metrics.sessions.back();
      s.action = executed;
      s.dist_to_goal = goal_dist(*post);
    }
    advance_goals();
  }

  for (auto& l : lanes) {
    l.metrics.timeout = timeout;
    l.metrics.goals_reached = static_cast<int>(goal);
    l.metrics.estimation_error = estimation_error(*post, gt);
    l.metrics.cov_norm = position_cov_norm(*post);
    l.metrics.final_estimate = post->robot_mean();
    l.metrics.final_gt = gt;
  }
  std::vector<RolloutMetrics> out;
  for (auto& l : lanes) out.push_back(std::move(l.metrics));
  return out;
}

const char* const kSessionCsvHeader =
    "session,planner,wall_ms,select_ms,objective,seq,action,fresh,reused,wildfire,resampled,"
    "factors_existing,factors_reused,factors_removed,factors_added,branch_dist,fallback,nodes,dist_to_goal,"
    "cumulative_ms";

void write_sessions_csv(std::ostream& out, const RolloutMetrics& m) {
  out << kSessionCsvHeader << '\n';
  out << std::setprecision(10);
  for (const auto& s : m.sessions) {
    out << s.idx << ',' << s.planner << ',' << s.wall_ms << ',' << s.select_ms << ',' << s.objective << ','
        << join(s.seq, '-') << ',' << s.action << ',' << s.fresh << ',' << s.reused << ',' << s.wildfire << ','
        << s.resampled << ',' << s.factors.existing << ',' << s.factors.reused << ',' << s.factors.removed << ','
        << s.factors.added << ',' << s.branch_dist << ',' << (s.fallback ? 1 : 0) << ',' << s.nodes << ','
        << s.dist_to_goal << ',' << s.cumulative_ms << '\n';
  }
}

std::string summary_json(const RolloutMetrics& m) {
  json j;
  j["planner"] = m.planner;
  j["world_seed"] = m.world_seed;
  j["seed"] = m.seed;
  j["sessions"] = m.sessions.size();
  j["cumulative_ms"] = m.cumulative_ms;
  j["estimation_error"] = m.estimation_error;
  j["cov_norm"] = m.cov_norm;
  j["timeout"] = m.timeout;
  j["goals_reached"] = m.goals_reached;
  j["actions"] = m.actions;
  j["final_estimate"] = std::vector<double>(m.final_estimate.data(), m.final_estimate.data() + m.final_estimate.size());
  j["final_gt"] = std::vector<double>(m.final_gt.data(), m.final_gt.data() + m.final_gt.size());
  int fresh = 0, reused = 0, wildfire = 0;
  for (const auto& s : m.sessions) {
    fresh += s.fresh;
    reused += s.reused;
    wildfire += s.wildfire;
  }
  j["fresh_nodes"] = fresh;
  j["reused_nodes"] = reused;
  j["wildfire_nodes"] = wildfire;
  return j.dump(2);
}

std::string tree_snapshot_json(const PlanningTree& tree) {
  static const char* kinds[] = {"root", "propagated", "posterior"};
  static const char* origins[] = {"fresh", "reused", "wildfire"};
  json j;
  j["k"] = tree.k;
  j["L"] = tree.L;
  j["actions"] = json::array();
  for (const auto& a : tree.actions) j["actions"].push_back(a.name());
  j["nodes"] = json::array();
  for (const auto& n : tree.nodes) {
    const VectorXd m = n.belief->robot_mean();
    j["nodes"].push_back({{"id", n.id},
                          {"parent", n.parent},
                          {"depth", n.depth},
                          {"kind", kinds[static_cast<int>(n.kind)]},
                          {"origin", origins[static_cast<int>(n.origin)]},
                          {"wildfire", n.wildfire},
                          {"reward", n.reward},
                          {"path", n.path},
                          {"robot_mean", std::vector<double>(m.data(), m.data() + m.size())}});
  }
  return j.dump();
}

double win_fraction(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) throw Error(ErrorKind::InvalidInput, "paired samples required");
  double w = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) w += a[i] < b[i] ? 1.0 : (a[i] == b[i] ? 0.5 : 0.0);
  return w / double(a.size());
}

double mann_whitney_p(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::InvalidInput, "empty sample");
  std::vector<std::pair<double, int>> all;
  for (double x : a) all.emplace_back(x, 0);
  for (double x : b) all.emplace_back(x, 1);
  std::sort(all.begin(), all.end());
  const double n1 = double(a.size()), n2 = double(b.size()), n = n1 + n2;
  double rank_a = 0.0, ties = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    const double t = double(j - i);
    const double r = 0.5 * double(i + 1 + j);  // average of ranks i+1..j
    for (std::size_t q = i; q < j; ++q)
      if (all[q].second == 0) rank_a += r;
    ties += t * t * t - t;
    i = j;
  }
  const double u = rank_a - n1 * (n1 + 1.0) / 2.0;
  const double mu = n1 * n2 / 2.0;
  const double var = n1 * n2 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
  if (var <= 0.0) return 1.0;  // every value tied
  const double zs = (std::abs(u - mu) - 0.5) / std::sqrt(var);
  return std::min(1.0, std::erfc(std::max(0.0, zs) / std::sqrt(2.0)));
}

double median(std::vector<double> v) {
  if (v.empty()) throw Error(ErrorKind::InvalidInput, "empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) throw Error(ErrorKind::InvalidInput, "empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

}  // namespace ixbsp
