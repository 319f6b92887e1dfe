#pragma once

#include <Eigen/Dense>

#include <compare>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace ixbsp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Planar poses carry (x, y, theta); linear-model states have no angle.
enum class VarKind : int { Pose = 0, Landmark = 1, State = 2 };

struct VariableId {
  VarKind kind = VarKind::Pose;
  int key = 0;  // time index for Pose/State, landmark id for Landmark
  int dim = 3;

  static VariableId pose(int t) { return {VarKind::Pose, t, 3}; }
  static VariableId landmark(int id) { return {VarKind::Landmark, id, 2}; }
  static VariableId state(int t, int dim) { return {VarKind::State, t, dim}; }

  bool is_robot() const { return kind != VarKind::Landmark; }
  bool operator==(const VariableId& o) const { return kind == o.kind && key == o.key; }
  std::strong_ordering operator<=>(const VariableId& o) const {
    if (auto c = kind <=> o.kind; c != 0) return c;
    return key <=> o.key;
  }
  std::string str() const;
};

enum class Primitive : int { Forward = 0, Left = 1, Right = 2, Control = 3 };

struct ActionId {
  Primitive primitive = Primitive::Forward;
  double translation = 1.0;
  double rotation = 0.0;
  VectorXd u;     // control vector for linear motion models
  int index = 0;  // position in the configured action set

  std::string name() const;
  bool operator==(const ActionId& o) const;
};

std::vector<ActionId> default_primitives();

// Entries are (pose-time, landmark-id); linear measurements use kDirect.
inline constexpr int kDirect = -1;
using DaEntry = std::pair<int, int>;

struct DataAssociation {
  std::set<DaEntry> entries;
  bool operator==(const DataAssociation& o) const = default;
};

struct DaDiff {
  DataAssociation keep;
  DataAssociation remove;
  DataAssociation add;
};

// Observed values keyed by landmark id (kDirect for linear models).
using MeasurementSet = std::map<int, VectorXd>;

struct Label {
  int t = 0;
  int k = 0;
  bool operator==(const Label& o) const = default;
};

double wrap_angle(double a);

}  // namespace ixbsp
