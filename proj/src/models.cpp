#include "ixbsp/models.hpp"

#include "ixbsp/errors.hpp"

#include <cmath>

namespace ixbsp {

namespace {

const LinearMeas& need_linear(const MeasModel& m) {
  if (!m.linear()) throw Error(ErrorKind::UnsupportedModel, "linear measurement model required");
  return std::get<LinearMeas>(m.model);
}

const RangeBearing& need_camera(const MeasModel& m) {
  if (m.linear()) throw Error(ErrorKind::UnsupportedModel, "landmark measurement on a linear model");
  return std::get<RangeBearing>(m.model);
}

}  // namespace

int MotionModel::state_dim() const {
  if (linear()) return static_cast<int>(std::get<LinearMotion>(model).F.rows());
  return 3;
}

const MatrixXd MotionModel::noise() const {
  if (linear()) return std::get<LinearMotion>(model).noise;
  return std::get<PlanarMotion>(model).noise;
}

VectorXd MotionModel::apply(const VectorXd& x, const ActionId& a) const {
  if (linear()) {
    const auto& m = std::get<LinearMotion>(model);
    VectorXd out = m.F * x;
    if (a.u.size() > 0) out += m.J * a.u;
    return out;
  }
  const double th = wrap_angle(x[2] + a.rotation);
  VectorXd out(3);
  out << x[0] + a.translation * std::cos(th), x[1] + a.translation * std::sin(th), th;
  return out;
}

MatrixXd MotionModel::jacobian(const VectorXd& x, const ActionId& a) const {
  if (linear()) return std::get<LinearMotion>(model).F;
  const double th = x[2] + a.rotation;
  MatrixXd F = MatrixXd::Identity(3, 3);
  F(0, 2) = -a.translation * std::sin(th);
  F(1, 2) = a.translation * std::cos(th);
  return F;
}

int MeasModel::z_dim() const {
  if (linear()) return static_cast<int>(std::get<LinearMeas>(model).H.rows());
  return 2;
}

MatrixXd MeasModel::noise() const {
  if (linear()) return std::get<LinearMeas>(model).noise;
  return std::get<RangeBearing>(model).noise;
}

bool MeasModel::visible(const VectorXd& pose, const Eigen::Vector2d& lm) const {
  const auto& c = need_camera(*this);
  const double dx = lm[0] - pose[0], dy = lm[1] - pose[1];
  const double r = std::hypot(dx, dy);
  if (r < c.min_range || r > c.max_range) return false;
  return std::abs(wrap_angle(std::atan2(dy, dx) - pose[2])) <= 0.5 * c.fov;
}

VectorXd MeasModel::predict(const VectorXd& pose, const Eigen::Vector2d& lm) const {
  need_camera(*this);
  const double dx = lm[0] - pose[0], dy = lm[1] - pose[1];
  VectorXd z(2);
  z << std::hypot(dx, dy), wrap_angle(std::atan2(dy, dx) - pose[2]);
  return z;
}

VectorXd MeasModel::predict_direct(const VectorXd& x) const { return need_linear(*this).H * x; }

void MeasModel::jacobians(const VectorXd& pose, const Eigen::Vector2d& lm, MatrixXd& Hp, MatrixXd& Hl) const {
  need_camera(*this);
  const double dx = lm[0] - pose[0], dy = lm[1] - pose[1];
  const double q = dx * dx + dy * dy;
  const double r = std::sqrt(q);
  Hp.resize(2, 3);
  Hp << -dx / r, -dy / r, 0.0,
         dy / q, -dx / q, -1.0;
  Hl = -Hp.leftCols(2);
}

VectorXd MeasModel::residual(const VectorXd& z, const VectorXd& predicted) const {
  VectorXd r = z - predicted;
  if (!linear()) r[1] = wrap_angle(r[1]);
  return r;
}

Eigen::Vector2d MeasModel::inverse(const VectorXd& pose, const VectorXd& z) const {
  need_camera(*this);
  const double a = pose[2] + z[1];
  return {pose[0] + z[0] * std::cos(a), pose[1] + z[0] * std::sin(a)};
}

}  // namespace ixbsp
