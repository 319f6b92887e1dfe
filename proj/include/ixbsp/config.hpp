#pragma once

#include "ixbsp/distances.hpp"
#include "ixbsp/models.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ixbsp {

enum class RewardKind { InfoDistance, DistanceWithCovPenalty };
enum class FocusedVars { Pose, Position };
enum class RepTest { PerCoordinate, Mahalanobis };
enum class TimingMode { Full, OverlapOnly, None };

struct RewardSpec {
  RewardKind kind = RewardKind::InfoDistance;
  double alpha = 0.5;
  FocusedVars focused = FocusedVars::Pose;
  Eigen::Vector2d goal = Eigen::Vector2d::Zero();
  double cov_threshold = 1.0;  // position std-dev (m) tolerated by the penalty variant
  double cov_weight = 10.0;
};

struct ScenarioConfig {
  double eps_c = 250.0;
  double eps_wf = 2.0;
  bool use_wf = true;
  double beta_sigma = 1.5;
  int n_x = 5;
  int n_z = 1;
  int L = 3;
  DistanceKind distance = DistanceKind::SqrtJ;
  bool sample_landmarks = true;
  RepTest rep_test = RepTest::PerCoordinate;
  std::vector<ActionId> actions = default_primitives();
  Models models = default_models();
  RewardSpec reward;
  std::uint64_t seed = 1;

  int n_u() const { return static_cast<int>(actions.size()); }
  void check() const;

  static Models default_models();
};

struct WorldSpec {
  int min_landmarks = 2;
  int max_landmarks = 150;
  int goals = 2;
  double width = 60.0;
  double height = 60.0;
  double goal_radius = 1.0;
};

struct SimConfig {
  ScenarioConfig scenario;
  WorldSpec world;
  Eigen::Vector3d prior_sigma{5.0, 5.0, 0.017453292519943295};
  int step_cap = 200;
  TimingMode timing = TimingMode::Full;
};

// Throws Error(ConfigError) with line/column of the offending text.
SimConfig parse_config(const std::string& text);
SimConfig load_config(const std::string& path);
std::string to_json(const SimConfig& cfg);

}  // namespace ixbsp
