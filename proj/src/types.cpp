#include "ixbsp/types.hpp"

#include <cmath>
#include <numbers>

namespace ixbsp {

std::string VariableId::str() const {
  switch (kind) {
    case VarKind::Pose: return "x" + std::to_string(key);
    case VarKind::Landmark: return "l" + std::to_string(key);
    case VarKind::State: return "s" + std::to_string(key);
  }
  return "?";
}

std::string ActionId::name() const {
  switch (primitive) {
    case Primitive::Forward: return "F";
    case Primitive::Left: return "L";
    case Primitive::Right: return "R";
    case Primitive::Control: return "u" + std::to_string(index);
  }
  return "?";
}

bool ActionId::operator==(const ActionId& o) const {
  if (primitive != o.primitive || translation != o.translation || rotation != o.rotation) return false;
  if (u.size() != o.u.size()) return false;
  return u.size() == 0 || u == o.u;
}

std::vector<ActionId> default_primitives() {
  const double q = std::numbers::pi / 2.0;
  std::vector<ActionId> out(3);
  out[0] = {Primitive::Forward, 1.0, 0.0, {}, 0};
  out[1] = {Primitive::Left, 1.0, q, {}, 1};
  out[2] = {Primitive::Right, 1.0, -q, {}, 2};
  return out;
}

double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * std::numbers::pi);
  if (w <= -std::numbers::pi) w += 2.0 * std::numbers::pi;
  return w;
}

}  // namespace ixbsp
