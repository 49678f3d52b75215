#pragma once

/**
 * @file
 * @brief Rotations, quaternions and homogeneous transforms over Expression and numeric types.
 *
 * Conventions: rpy is extrinsic x-y-z, so R = Rz(yaw) Ry(pitch) Rx(roll). Quaternions are stored
 * (x, y, z, w) with w >= 0 when produced from a matrix.
 */

#include <Eigen/Dense>

#include <cmath>

#include "taskopt/error.hpp"
#include "taskopt/expr.hpp"

namespace taskopt::spatial {

// ---- symbolic ----

inline Expression rotation_x(const Expression & t)
{
  const Expression c = cos(t);
  const Expression s = sin(t);
  return vertcat({horzcat({1.0, 0.0, 0.0}), horzcat({0.0, c, -s}), horzcat({0.0, s, c})});
}

inline Expression rotation_y(const Expression & t)
{
  const Expression c = cos(t);
  const Expression s = sin(t);
  return vertcat({horzcat({c, 0.0, s}), horzcat({0.0, 1.0, 0.0}), horzcat({-s, 0.0, c})});
}

inline Expression rotation_z(const Expression & t)
{
  const Expression c = cos(t);
  const Expression s = sin(t);
  return vertcat({horzcat({c, -s, 0.0}), horzcat({s, c, 0.0}), horzcat({0.0, 0.0, 1.0})});
}

/// Rotation by angle t about a unit axis (Rodrigues).
inline Expression axis_angle(const Eigen::Vector3d & axis, const Expression & t)
{
  if (axis == Eigen::Vector3d::UnitX()) { return rotation_x(t); }
  if (axis == Eigen::Vector3d::UnitY()) { return rotation_y(t); }
  if (axis == Eigen::Vector3d::UnitZ()) { return rotation_z(t); }
  Eigen::Matrix3d k;
  k << 0, -axis.z(), axis.y(), axis.z(), 0, -axis.x(), -axis.y(), axis.x(), 0;
  const Eigen::Matrix3d k2 = k * k;
  return Expression::eye(3) + Expression(k) * sin(t) + Expression(k2) * (1.0 - cos(t));
}

inline Expression rpy_to_matrix(const Expression & rpy)
{
  if (rpy.numel() != 3) { throw ShapeError("rpy_to_matrix: expected 3 angles"); }
  return mtimes(rotation_z(rpy(2)), mtimes(rotation_y(rpy(1)), rotation_x(rpy(0))));
}

/// Extrinsic x-y-z angles; pitch lies in [-pi/2, pi/2] and is singular at the ends.
inline Expression matrix_to_rpy(const Expression & r)
{
  if (r.rows() != 3 || r.cols() != 3) { throw ShapeError("matrix_to_rpy: expected 3x3"); }
  const Expression roll = atan2(r(2, 1), r(2, 2));
  const Expression pitch = atan2(-r(2, 0), sqrt(square(r(0, 0)) + square(r(1, 0))));
  const Expression yaw = atan2(r(1, 0), r(0, 0));
  return vertcat({roll, pitch, yaw});
}

/// Shepperd's method; branch selection happens at evaluation time so the result stays symbolic.
inline Expression matrix_to_quaternion(const Expression & r)
{
  if (r.rows() != 3 || r.cols() != 3) { throw ShapeError("matrix_to_quaternion: expected 3x3"); }
  const Expression r00 = r(0, 0), r11 = r(1, 1), r22 = r(2, 2);
  const Expression t = r00 + r11 + r22;

  const Expression sw = 0.5 * sqrt(1.0 + t);
  const Expression qw = vertcat({(r(2, 1) - r(1, 2)) / (4.0 * sw), (r(0, 2) - r(2, 0)) / (4.0 * sw),
                                 (r(1, 0) - r(0, 1)) / (4.0 * sw), sw});
  const Expression sx = 0.5 * sqrt(1.0 + r00 - r11 - r22);
  const Expression qx = vertcat({sx, (r(0, 1) + r(1, 0)) / (4.0 * sx), (r(0, 2) + r(2, 0)) / (4.0 * sx),
                                 (r(2, 1) - r(1, 2)) / (4.0 * sx)});
  const Expression sy = 0.5 * sqrt(1.0 - r00 + r11 - r22);
  const Expression qy = vertcat({(r(0, 1) + r(1, 0)) / (4.0 * sy), sy, (r(1, 2) + r(2, 1)) / (4.0 * sy),
                                 (r(0, 2) - r(2, 0)) / (4.0 * sy)});
  const Expression sz = 0.5 * sqrt(1.0 - r00 - r11 + r22);
  const Expression qz = vertcat({(r(0, 2) + r(2, 0)) / (4.0 * sz), (r(1, 2) + r(2, 1)) / (4.0 * sz), sz,
                                 (r(1, 0) - r(0, 1)) / (4.0 * sz)});

  const Expression x_over_y = r00 - r11;
  const Expression x_over_z = r00 - r22;
  const Expression y_over_z = r11 - r22;
  const Expression max_diag = if_else(x_over_y, if_else(x_over_z, r00, r22), if_else(y_over_z, r11, r22));
  const Expression diag_branch = if_else(x_over_y, if_else(x_over_z, qx, qz), if_else(y_over_z, qy, qz));
  const Expression q = if_else(t - max_diag, qw, diag_branch);
  return if_else(-q(3), -q, q);
}

inline Expression quaternion_to_matrix(const Expression & q)
{
  if (q.numel() != 4) { throw ShapeError("quaternion_to_matrix: expected 4 components"); }
  const Expression x = q(0), y = q(1), z = q(2), w = q(3);
  return vertcat({horzcat({1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - z * w), 2.0 * (x * z + y * w)}),
                  horzcat({2.0 * (x * y + z * w), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - x * w)}),
                  horzcat({2.0 * (x * z - y * w), 2.0 * (y * z + x * w), 1.0 - 2.0 * (x * x + y * y)})});
}

/// Hamilton product a * b, so that matrix(a * b) == matrix(a) * matrix(b).
inline Expression quaternion_product(const Expression & a, const Expression & b)
{
  if (a.numel() != 4 || b.numel() != 4) { throw ShapeError("quaternion_product: expected 4 components"); }
  const Expression ax = a(0), ay = a(1), az = a(2), aw = a(3);
  const Expression bx = b(0), by = b(1), bz = b(2), bw = b(3);
  return vertcat({aw * bx + ax * bw + ay * bz - az * by, aw * by - ax * bz + ay * bw + az * bx,
                  aw * bz + ax * by - ay * bx + az * bw, aw * bw - ax * bx - ay * by - az * bz});
}

inline Expression transform(const Expression & rotation, const Expression & translation)
{
  if (rotation.rows() != 3 || rotation.cols() != 3 || translation.numel() != 3) {
    throw ShapeError("transform: expected a 3x3 rotation and a 3-vector");
  }
  return vertcat({horzcat({rotation, translation.vec()}), horzcat({0.0, 0.0, 0.0, 1.0})});
}

inline Expression translation_transform(const Expression & p) { return transform(Expression::eye(3), p); }

inline Expression rotation_of(const Expression & t) { return t.block(0, 0, 3, 3); }
inline Expression translation_of(const Expression & t) { return t.block(0, 3, 3, 1); }

inline Expression transform_compose(const Expression & a, const Expression & b) { return mtimes(a, b); }

inline Expression transform_invert(const Expression & t)
{
  if (t.rows() != 4 || t.cols() != 4) { throw ShapeError("transform_invert: expected 4x4"); }
  const Expression rt = rotation_of(t).T();
  return transform(rt, -mtimes(rt, translation_of(t)));
}

// ---- numeric ----

inline Eigen::Matrix3d rotation_x(double t) { return rotation_x(Expression(t)).value(); }
inline Eigen::Matrix3d rotation_y(double t) { return rotation_y(Expression(t)).value(); }
inline Eigen::Matrix3d rotation_z(double t) { return rotation_z(Expression(t)).value(); }

inline Eigen::Matrix3d rpy_to_matrix(const Eigen::Vector3d & rpy) { return rpy_to_matrix(Expression(rpy)).value(); }

inline Eigen::Vector3d matrix_to_rpy(const Eigen::Matrix3d & r) { return matrix_to_rpy(Expression(r)).value(); }

/// Throws ValueError unless r is orthonormal with determinant +1 to 1e-6.
inline Eigen::Vector4d matrix_to_quaternion(const Eigen::Matrix3d & r)
{
  if ((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6 ||
      std::abs(r.determinant() - 1.0) > 1e-6) {
    throw ValueError("matrix_to_quaternion: matrix is not a rotation");
  }
  Eigen::Vector4d q = matrix_to_quaternion(Expression(r)).value();
  return q / q.norm();
}

inline Eigen::Matrix3d quaternion_to_matrix(const Eigen::Vector4d & q)
{
  return quaternion_to_matrix(Expression(Eigen::Vector4d(q / q.norm()))).value();
}

inline Eigen::Vector4d quaternion_product(const Eigen::Vector4d & a, const Eigen::Vector4d & b)
{
  Eigen::Vector4d q = quaternion_product(Expression(a), Expression(b)).value();
  return q / q.norm();
}

inline Eigen::Matrix4d transform(const Eigen::Matrix3d & r, const Eigen::Vector3d & p)
{
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  t.topLeftCorner<3, 3>() = r;
  t.topRightCorner<3, 1>() = p;
  return t;
}

inline Eigen::Matrix4d transform_compose(const Eigen::Matrix4d & a, const Eigen::Matrix4d & b) { return a * b; }

inline Eigen::Matrix4d transform_invert(const Eigen::Matrix4d & t)
{
  const Eigen::Matrix3d rt = t.topLeftCorner<3, 3>().transpose();
  return transform(rt, -rt * t.topRightCorner<3, 1>());
}

}  // namespace taskopt::spatial
