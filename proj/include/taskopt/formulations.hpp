#pragma once

/**
 * @file
 * @brief Ready-made formulations: end-pose IK, an obstacle-avoiding joint-space plan and the
 * position-only / full-pose reach variants.
 */

#include <Eigen/Core>

#include <string>
#include <vector>

#include "taskopt/builder.hpp"

namespace taskopt::formulations {

struct EndPoseSpec
{
  std::string tip;
  double regularization = 1e-6;         // weight of ||q - q_nominal||^2
  bool joint_limits = true;
  double manipulability_weight = 0.0;   // subtracts w * manipulability of the linear rows
};

/**
 * @brief min ||p(q) - goal||^2 + lambda ||q - q_nominal||^2 (optionally - w m(q)), within limits.
 *
 * Parameters: "goal" (3) and "q_nominal" (ndof). The robot must carry only derivative order 0.
 */
inline OptimizationBuilder end_pose(const RobotModel & robot, const EndPoseSpec & spec)
{
  OptimizationBuilder b(1, {robot});
  const std::string & n = robot.name();
  const Expression q = b.get_model_state(n, 0);
  const Expression goal = b.add_parameter("goal", 3);
  const Expression q_nominal = b.add_parameter("q_nominal", robot.ndof());
  const Expression p = robot.global_link_position(spec.tip, q);
  b.add_cost_term("goal", sumsqr(p - goal));
  b.add_cost_term("regularizer", spec.regularization * sumsqr(q - q_nominal));
  if (spec.manipulability_weight != 0.0) {
    b.add_cost_term("manipulability", -spec.manipulability_weight * robot.manipulability(spec.tip, q, {0, 1, 2}));
  }
  if (spec.joint_limits) { b.enforce_model_limits(n); }
  return b;
}

enum class ReachMode { PositionOnly, FullPose };

struct ReachSpec
{
  std::string tip;
  ReachMode mode = ReachMode::FullPose;
  double regularization = 1e-6;
  double z_band = 0.1;  // position-only: |z - goal_z| <= z_band
};

/**
 * @brief Reach a goal either in the horizontal plane (z only banded) or with the full pose.
 *
 * Full pose adds the 3D position cost and keeps the tool z-axis pointing straight down as a hard
 * constraint. Parameters: "goal" (3) and "q_nominal" (ndof).
 */
inline OptimizationBuilder reach(const RobotModel & robot, const ReachSpec & spec)
{
  OptimizationBuilder b(1, {robot});
  const std::string & n = robot.name();
  const Expression q = b.get_model_state(n, 0);
  const Expression goal = b.add_parameter("goal", 3);
  const Expression q_nominal = b.add_parameter("q_nominal", robot.ndof());
  const Expression p = robot.global_link_position(spec.tip, q);
  b.add_cost_term("regularizer", spec.regularization * sumsqr(q - q_nominal));
  if (spec.mode == ReachMode::PositionOnly) {
    b.add_cost_term("goal", sumsqr(p.segment(0, 2) - goal.segment(0, 2)));
    b.add_leq_inequality_constraint("z_band/upper", p(2) - goal(2), Expression(spec.z_band));
    b.add_leq_inequality_constraint("z_band/lower", goal(2) - p(2), Expression(spec.z_band));
  } else {
    b.add_cost_term("goal", sumsqr(p - goal));
    const Expression r = robot.global_link_rotation(spec.tip, q);
    b.add_equality_constraint("tool_down", r.block(0, 2, 2, 1));
  }
  b.enforce_model_limits(n);
  return b;
}

struct PlanSpec
{
  std::string tip;
  int T = 20;
  int obstacles = 1;
  double smoothing = 1e-5;  // weight of sum ||dq_t||^2
  bool optimize_time = false;
};

/**
 * @brief Joint-space plan to a goal tip position around spherical obstacles.
 *
 * Final-pose cost, q_0 == q_init, joint position and velocity limits, Euler integration with a
 * fixed step and ||p(q_t) - o_i||^2 >= r_i^2 at every t. Parameters: "goal" (3), "q_init" (ndof),
 * "dt" (1, absent with optimize_time) and "obstacle<i>/center" (3), "obstacle<i>/radius" (1).
 * The robot must carry orders 0 and 1.
 */
inline OptimizationBuilder obstacle_plan(const RobotModel & robot, const PlanSpec & spec)
{
  if (spec.T < 2) { throw ValueError("a plan needs T >= 2"); }
  OptimizationBuilder b(spec.T, {robot}, {}, false, spec.optimize_time);
  const std::string & n = robot.name();
  const Expression goal = b.add_parameter("goal", 3);
  const Expression q_init = b.add_parameter("q_init", robot.ndof());
  const Expression q = b.get_model_states(n, 0);
  const Expression dq = b.get_model_states(n, 1);

  b.add_cost_term("goal", sumsqr(robot.global_link_position(spec.tip, b.get_model_state(n, -1)) - goal));
  if (spec.smoothing > 0) { b.add_cost_term("smoothing", spec.smoothing * sumsqr(dq)); }
  b.add_equality_constraint("initial", b.get_model_state(n, 0), q_init);
  b.enforce_model_limits(n);
  if (spec.optimize_time) {
    b.integrate_model_states(n, 1);
  } else {
    b.integrate_model_states(n, 1, b.add_parameter("dt"));
  }

  std::vector<Expression> positions;
  for (int t = 0; t < spec.T; ++t) { positions.push_back(robot.global_link_position(spec.tip, q.col(t))); }
  for (int i = 0; i < spec.obstacles; ++i) {
    const std::string name = "obstacle" + std::to_string(i);
    const Expression center = b.add_parameter(name + "/center", 3);
    const Expression radius = b.add_parameter(name + "/radius");
    std::vector<Expression> clearance;
    for (const auto & pt : positions) { clearance.push_back(sumsqr(pt - center)); }
    const Expression d2 = vertcat(std::span<const Expression>(clearance));
    b.add_leq_inequality_constraint(name, Expression::ones(spec.T) * (radius * radius), d2);
  }
  return b;
}

}  // namespace taskopt::formulations
