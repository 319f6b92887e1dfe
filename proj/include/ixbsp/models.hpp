#pragma once

#include "ixbsp/types.hpp"

#include <variant>

namespace ixbsp {

struct PlanarMotion {
  Eigen::Matrix3d noise = Eigen::Matrix3d::Identity();
};

// x' = F x + J u + w
struct LinearMotion {
  MatrixXd F, J, noise;
};

struct MotionModel {
  std::variant<PlanarMotion, LinearMotion> model;

  bool linear() const { return std::holds_alternative<LinearMotion>(model); }
  int state_dim() const;
  const MatrixXd noise() const;
  VectorXd apply(const VectorXd& x, const ActionId& a) const;
  MatrixXd jacobian(const VectorXd& x, const ActionId& a) const;
};

struct RangeBearing {
  double fov = 1.5707963267948966;
  double min_range = 2.0;
  double max_range = 40.0;
  Eigen::Matrix2d noise = Eigen::Matrix2d::Identity();
};

// z = H x + v, observing the robot state directly.
struct LinearMeas {
  MatrixXd H, noise;
};

struct MeasModel {
  std::variant<RangeBearing, LinearMeas> model;

  bool linear() const { return std::holds_alternative<LinearMeas>(model); }
  int z_dim() const;
  MatrixXd noise() const;
  bool visible(const VectorXd& pose, const Eigen::Vector2d& lm) const;
  VectorXd predict(const VectorXd& pose, const Eigen::Vector2d& lm) const;
  VectorXd predict_direct(const VectorXd& x) const;
  // Jacobians of the prediction w.r.t. pose and landmark.
  void jacobians(const VectorXd& pose, const Eigen::Vector2d& lm, MatrixXd& Hp, MatrixXd& Hl) const;
  VectorXd residual(const VectorXd& z, const VectorXd& predicted) const;
  Eigen::Vector2d inverse(const VectorXd& pose, const VectorXd& z) const;
};

struct Models {
  MotionModel motion;
  MeasModel meas;
};

}  // namespace ixbsp
