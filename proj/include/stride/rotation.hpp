#pragma once

#include "stride/common.hpp"

namespace stride {

// 6D rotation: the first two columns of a rotation matrix, column-major
// (r[0..2] = column 0, r[3..5] = column 1).

/// Gram-Schmidt decode. Throws DegenerateRotation when either column is
/// near zero or the two are (near) parallel.
Mat3 sixd_to_matrix(const Rotation6D& r);

/// Reverse-mode derivative of sixd_to_matrix: given dL/dR, returns dL/dr.
Rotation6D sixd_to_matrix_backward(const Rotation6D& r, const Mat3& grad_matrix);

/// Throws NotARotation unless R is orthonormal (1e-6) with determinant +1.
Rotation6D matrix_to_sixd(const Mat3& R);

/// Decode then re-encode; maps any decodable 6D vector onto the canonical
/// encoding of its rotation.
Rotation6D orthonormalize_sixd(const Rotation6D& r);

bool is_rotation(const Mat3& R, double tol = 1e-6);

/// Rotation about +Y. rot_y(theta) maps +Z onto (sin theta, 0, cos theta).
Mat3 rot_y(double theta);

Mat3 axis_angle(const Vec3& axis, double angle);

/// Heading of a rotation: the yaw of its +Z axis projected on the ground plane.
/// Facing vectors use the (sin yaw, cos yaw) convention throughout.
double heading_yaw(const Mat3& R);

inline Vec2 facing_from_yaw(double yaw) { return {std::sin(yaw), std::cos(yaw)}; }
inline double yaw_from_facing(const Vec2& f) { return std::atan2(f.x(), f.y()); }

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

}  // namespace stride
