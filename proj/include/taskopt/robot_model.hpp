#pragma once

/**
 * @file
 * @brief Kinematic robot model over a URDF tree: forward kinematics, Jacobians and
 * manipulability as expressions in a joint vector q.
 *
 * q holds one entry per actuated joint below the base link, in depth-first document order.
 * All frames are expressed in the world frame, which differs from the base link frame by the
 * registered base offset.
 */

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "taskopt/autodiff.hpp"
#include "taskopt/function.hpp"
#include "taskopt/spatial.hpp"
#include "taskopt/urdf.hpp"

namespace taskopt {

/// Finite stand-in for an unbounded position limit (continuous joints).
inline constexpr double kContinuousJointLimit = std::numbers::pi * 1e6;

struct RotationRepresentations
{
  Expression matrix;      // 3x3
  Expression quaternion;  // (x, y, z, w)
  Expression rpy;         // extrinsic x-y-z
};

class RobotModel
{
public:
  /// base_link defaults to the URDF root; name defaults to the robot name.
  explicit RobotModel(UrdfModel urdf, std::vector<int> time_derivs = {0, 1}, std::string name = {},
                      std::string base_link = {})
      : urdf_(std::move(urdf)), name_(std::move(name)), base_(std::move(base_link)), time_derivs_(std::move(time_derivs))
  {
    if (name_.empty()) { name_ = urdf_.name; }
    if (name_.empty()) { throw ValueError("robot model needs a name"); }
    if (base_.empty()) { base_ = urdf_.root; }
    if (!urdf_.has_link(base_)) { throw LookupError("no link named '" + base_ + "'"); }
    if (time_derivs_.empty()) { throw ValueError("robot model needs at least one time derivative order"); }
    for (std::size_t i = 0; i < time_derivs_.size(); ++i) {
      if (time_derivs_[i] < 0) { throw ValueError("negative time derivative order"); }
      for (std::size_t j = 0; j < i; ++j) {
        if (time_derivs_[i] == time_derivs_[j]) { throw ValueError("duplicate time derivative order"); }
      }
    }
    collect_actuated(base_);
  }

  const std::string & name() const noexcept { return name_; }
  const UrdfModel & urdf() const noexcept { return urdf_; }
  const std::string & base_link() const noexcept { return base_; }
  const std::vector<int> & time_derivs() const noexcept { return time_derivs_; }
  int ndof() const noexcept { return static_cast<int>(actuated_.size()); }
  const std::vector<UrdfJoint> & actuated_joints() const noexcept { return actuated_; }
  const Eigen::Matrix4d & base_offset() const noexcept { return base_offset_; }

  std::vector<std::string> joint_names() const
  {
    std::vector<std::string> out;
    for (const auto & j : actuated_) { out.push_back(j.name); }
    return out;
  }

  int joint_index(const std::string & joint) const
  {
    for (int i = 0; i < ndof(); ++i) {
      if (actuated_[static_cast<std::size_t>(i)].name == joint) { return i; }
    }
    throw LookupError("no actuated joint named '" + joint + "'");
  }

  /// Position limits; continuous joints report +-kContinuousJointLimit.
  Eigen::VectorXd lower_limits() const { return limits(true); }
  Eigen::VectorXd upper_limits() const { return limits(false); }

  /// Velocity bounds; +inf where the URDF gives none.
  Eigen::VectorXd velocity_limits() const
  {
    Eigen::VectorXd v(ndof());
    for (int i = 0; i < ndof(); ++i) { v(i) = actuated_[static_cast<std::size_t>(i)].velocity; }
    return v;
  }

  /// True for revolute and prismatic joints; continuous joints have no position bounds.
  bool has_position_limits(int i) const
  {
    return actuated_.at(static_cast<std::size_t>(i)).type != JointType::Continuous;
  }

  void register_base_offset(const Eigen::Matrix4d & transform) { base_offset_ = transform; }

  /// Adds a virtual link rigidly attached to parent_link.
  void register_tip(const std::string & name, const std::string & parent_link, const Eigen::Matrix4d & transform)
  {
    if (!has_link(parent_link)) { throw LookupError("no link named '" + parent_link + "'"); }
    if (has_link(name)) { throw DuplicateNameError("link '" + name + "' already exists"); }
    tips_.emplace(name, std::make_pair(parent_link, transform));
  }

  bool has_link(const std::string & link) const { return urdf_.has_link(link) || tips_.count(link) > 0; }

  Expression global_link_transform(const std::string & link, const Expression & q) const
  {
    check_q(q);
    if (const auto it = tips_.find(link); it != tips_.end()) {
      return mtimes(global_link_transform(it->second.first, q), Expression(it->second.second));
    }
    Expression t = Expression(base_offset_);
    for (const auto & j : chain(link)) { t = mtimes(mtimes(t, origin(j)), motion(j, q)); }
    return t;
  }

  Expression global_link_position(const std::string & link, const Expression & q) const
  {
    return spatial::translation_of(global_link_transform(link, q));
  }

  Expression global_link_rotation(const std::string & link, const Expression & q) const
  {
    return spatial::rotation_of(global_link_transform(link, q));
  }

  RotationRepresentations global_link_rotation_representations(const std::string & link, const Expression & q) const
  {
    const Expression r = global_link_rotation(link, q);
    return {r, spatial::matrix_to_quaternion(r), spatial::matrix_to_rpy(r)};
  }

  /// 6 x ndof; rows are linear then angular velocity, both in the world frame.
  Expression geometric_jacobian(const std::string & link, const Expression & q) const
  {
    check_q(q);
    std::string frame = link;
    Eigen::Matrix4d tip_offset = Eigen::Matrix4d::Identity();
    for (auto it = tips_.find(frame); it != tips_.end(); it = tips_.find(frame)) {
      tip_offset = it->second.second * tip_offset;
      frame = it->second.first;
    }
    std::vector<Expression> cols(static_cast<std::size_t>(ndof()), Expression::zeros(6, 1));
    std::vector<std::pair<int, Expression>> joint_frames;
    Expression t = Expression(base_offset_);
    for (const auto & j : chain(frame)) {
      t = mtimes(t, origin(j));
      if (j.actuated()) { joint_frames.emplace_back(joint_index(j.name), t); }
      t = mtimes(t, motion(j, q));
    }
    const Expression pe = spatial::translation_of(mtimes(t, Expression(tip_offset)));
    for (const auto & [i, frame_t] : joint_frames) {
      const UrdfJoint & j = actuated_[static_cast<std::size_t>(i)];
      const Expression z = mtimes(spatial::rotation_of(frame_t), Expression(Eigen::Vector3d(j.axis)));
      if (j.type == JointType::Prismatic) {
        cols[static_cast<std::size_t>(i)] = vertcat({z, Expression::zeros(3, 1)});
      } else {
        cols[static_cast<std::size_t>(i)] = vertcat({cross(z, pe - spatial::translation_of(frame_t)), z});
      }
    }
    return horzcat(std::span<const Expression>(cols));
  }

  /**
   * @brief 6 x ndof derivative of (position, rpy).
   *
   * Singular where pitch reaches +-pi/2; evaluation there gives large or non-finite entries.
   */
  Expression analytical_jacobian(const std::string & link, const Expression & q) const
  {
    check_q(q);
    const Expression z = Expression::symbol(name_ + "/__q", ndof(), 1);
    const Expression t = global_link_transform(link, z);
    const Expression pose = vertcat({spatial::translation_of(t), spatial::matrix_to_rpy(spatial::rotation_of(t))});
    return substitute(jacobian(pose, z), z, q.vec());
  }

  /// sqrt(det(J J^T)) over the selected rows of the geometric Jacobian (at most 3 rows).
  Expression manipulability(const std::string & link, const Expression & q, const std::vector<int> & rows) const
  {
    if (rows.empty() || rows.size() > 3) { throw ShapeError("manipulability: select between 1 and 3 rows"); }
    const Expression j = geometric_jacobian(link, q);
    std::vector<Expression> selected;
    for (int r : rows) {
      if (r < 0 || r >= 6) { throw ShapeError("manipulability: row index out of range"); }
      selected.push_back(j.row(r));
    }
    const Expression js = vertcat(std::span<const Expression>(selected));
    return sqrt(det(mtimes(js, js.T())));
  }

  /// Numeric forward kinematics, mainly for diagnostics.
  Eigen::Matrix4d link_transform(const std::string & link, const Eigen::VectorXd & q) const
  {
    const Expression z = Expression::symbol("q", ndof(), 1);
    return evaluate(global_link_transform(link, z), {{"q", q}});
  }

private:
  void collect_actuated(const std::string & link)
  {
    for (const auto & j : urdf_.joints) {
      if (j.parent != link) { continue; }
      if (j.actuated()) { actuated_.push_back(j); }
      collect_actuated(j.child);
    }
  }

  Eigen::VectorXd limits(bool lower) const
  {
    Eigen::VectorXd v(ndof());
    for (int i = 0; i < ndof(); ++i) {
      const auto & j = actuated_[static_cast<std::size_t>(i)];
      if (j.type == JointType::Continuous) {
        v(i) = lower ? -kContinuousJointLimit : kContinuousJointLimit;
      } else {
        v(i) = lower ? j.lower : j.upper;
      }
    }
    return v;
  }

  void check_q(const Expression & q) const
  {
    if (q.numel() != ndof()) {
      throw ShapeError("robot '" + name_ + "' expects " + std::to_string(ndof()) + " joint values, got " +
                       std::to_string(q.numel()));
    }
  }

  std::vector<UrdfJoint> chain(const std::string & link) const
  {
    if (!urdf_.has_link(link)) { throw LookupError("no link named '" + link + "'"); }
    return extract_chain(urdf_, base_, link);
  }

  static Expression origin(const UrdfJoint & j)
  {
    if (j.xyz.isZero(0.0) && j.rpy.isZero(0.0)) { return Expression::eye(4); }
    return Expression(spatial::transform(spatial::rpy_to_matrix(Eigen::Vector3d(j.rpy)), j.xyz));
  }

  Expression motion(const UrdfJoint & j, const Expression & q) const
  {
    switch (j.type) {
    case JointType::Fixed: return Expression::eye(4);
    case JointType::Prismatic: return spatial::translation_transform(Expression(Eigen::Vector3d(j.axis)) * q(joint_index(j.name)));
    default: return spatial::transform(spatial::axis_angle(j.axis, q(joint_index(j.name))), Expression::zeros(3, 1));
    }
  }

  UrdfModel urdf_;
  std::string name_;
  std::string base_;
  std::vector<int> time_derivs_;
  std::vector<UrdfJoint> actuated_;
  Eigen::Matrix4d base_offset_ = Eigen::Matrix4d::Identity();
  std::map<std::string, std::pair<std::string, Eigen::Matrix4d>> tips_;
};

}  // namespace taskopt
