#pragma once

#include "ixbsp/incremental.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace ixbsp {

struct WorldModel {
  std::vector<std::pair<int, Eigen::Vector2d>> landmarks;
  std::vector<Eigen::Vector2d> goals;
  double width = 0.0;
  double height = 0.0;

  std::uint64_t hash() const;
};

// Landmarks and goals uniform over [-w/2, w/2] x [-h/2, h/2]; the robot starts at the origin.
WorldModel generate_world(std::uint64_t seed, const WorldSpec& spec);

struct StepOutcome {
  VectorXd pose;
  MeasurementSet z;
  DataAssociation da;
};

// Moves the true pose through the noisy motion model and senses every visible landmark.
// `time` labels the new pose in the association.
StepOutcome simulate_step(const VectorXd& gt, const ActionId& action, const WorldModel& world, const Models& models,
                          Rng& rng, int time);
// Sensing without motion, used for the initial observation.
StepOutcome sense_world(const VectorXd& gt, const WorldModel& world, const Models& models, Rng& rng, int time);

double estimation_error(const GaussianBelief& final_belief, const VectorXd& gt_pose);
double position_cov_norm(const GaussianBelief& b);

enum class PlannerKind { XBSP, MLBSP, IXBSP, IMLBSP };

struct PlannerSpec {
  PlannerKind kind = PlannerKind::XBSP;
  bool wildfire = true;  // only read by the incremental kinds
  std::string name;

  bool incremental() const { return kind == PlannerKind::IXBSP || kind == PlannerKind::IMLBSP; }
};

// xbsp, ml, ixbsp, iml, ixbsp-nowf, iml-nowf
PlannerSpec parse_planner(const std::string& name);

struct SessionMetrics {
  int idx = 0;
  std::string planner;
  double wall_ms = 0.0;
  double select_ms = 0.0;
  double objective = 0.0;
  std::vector<int> seq;
  int action = 0;  // action actually executed by the driver
  int fresh = 0, reused = 0, wildfire = 0, resampled = 0;
  FactorStats factors;
  double branch_dist = -1.0;
  bool fallback = false;
  double dist_to_goal = 0.0;
  double cumulative_ms = 0.0;
  int nodes = 0;
};

struct RolloutMetrics {
  std::string planner;
  std::uint64_t world_seed = 0;
  std::uint64_t seed = 0;
  std::vector<SessionMetrics> sessions;
  double cumulative_ms = 0.0;
  double estimation_error = 0.0;
  double cov_norm = 0.0;
  bool timeout = false;
  int goals_reached = 0;
  std::vector<int> actions;  // executed by the driver
  VectorXd final_estimate;
  VectorXd final_gt;
  std::shared_ptr<const PlanningTree> last_tree;
};

struct RolloutOptions {
  BuildOptions build;
  std::vector<PlannerSpec> shadows;  // plan on the same posteriors, never execute
};

double timed_ms(const PlanResult& r, TimingMode mode);

// Plan-act-infer loop. Result 0 belongs to the driver, the rest to the shadows in order.
std::vector<RolloutMetrics> run_rollout(const WorldModel& world, const PlannerSpec& driver, const SimConfig& cfg,
                                        std::uint64_t world_seed, std::uint64_t seed, const RolloutOptions& opt = {});

// Output helpers.
extern const char* const kSessionCsvHeader;
void write_sessions_csv(std::ostream& out, const RolloutMetrics& m);
std::string summary_json(const RolloutMetrics& m);
std::string tree_snapshot_json(const PlanningTree& tree);

// Comparison statistics; smaller values win, ties count one half.
double win_fraction(const std::vector<double>& a, const std::vector<double>& b);
// Two-sided Mann-Whitney U test, normal approximation with tie correction.
double mann_whitney_p(const std::vector<double>& a, const std::vector<double>& b);
double median(std::vector<double> v);
double mean(const std::vector<double>& v);

}  // namespace ixbsp
