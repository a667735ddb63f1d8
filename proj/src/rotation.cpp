#include "stride/rotation.hpp"

#include <cmath>

namespace stride {

namespace {

constexpr double kMinNorm = 1e-8;
// |sin| of the angle between the two columns below which they count as parallel.
constexpr double kMinSine = 1e-8;

}  // namespace

Mat3 sixd_to_matrix(const Rotation6D& r) {
  const Vec3 a1 = r.head<3>();
  const Vec3 a2 = r.tail<3>();
  const double n1 = a1.norm();
  if (!(n1 > kMinNorm) || !(a2.norm() > kMinNorm)) {
    throw DegenerateRotation("6D rotation has a near-zero column");
  }
  const Vec3 b1 = a1 / n1;
  const Vec3 u = a2 - b1.dot(a2) * b1;
  const double nu = u.norm();
  if (!(nu > kMinSine * a2.norm())) {
    throw DegenerateRotation("6D rotation columns are parallel");
  }
  const Vec3 b2 = u / nu;
  Mat3 R;
  R.col(0) = b1;
  R.col(1) = b2;
  R.col(2) = b1.cross(b2);
  return R;
}

Rotation6D sixd_to_matrix_backward(const Rotation6D& r, const Mat3& grad_matrix) {
  const Vec3 a1 = r.head<3>();
  const Vec3 a2 = r.tail<3>();
  const double n1 = a1.norm();
  const Vec3 b1 = a1 / n1;
  const double proj = b1.dot(a2);
  const Vec3 u = a2 - proj * b1;
  const double nu = u.norm();
  const Vec3 b2 = u / nu;

  Vec3 g1 = grad_matrix.col(0);
  Vec3 g2 = grad_matrix.col(1);
  const Vec3 g3 = grad_matrix.col(2);
  // b3 = b1 x b2
  g1 += b2.cross(g3);
  g2 += g3.cross(b1);
  // b2 = u / |u|
  const Vec3 gu = (g2 - b2 * b2.dot(g2)) / nu;
  // u = a2 - (b1.a2) b1
  const Vec3 ga2 = gu - b1 * b1.dot(gu);
  g1 -= proj * gu + a2 * b1.dot(gu);
  // b1 = a1 / |a1|
  const Vec3 ga1 = (g1 - b1 * b1.dot(g1)) / n1;

  Rotation6D out;
  out.head<3>() = ga1;
  out.tail<3>() = ga2;
  return out;
}

bool is_rotation(const Mat3& R, double tol) {
  if (!R.allFinite()) return false;
  const double ortho = (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(R.determinant() - 1.0) <= tol;
}

Rotation6D matrix_to_sixd(const Mat3& R) {
  if (!is_rotation(R)) {
    throw NotARotation("matrix is not a proper rotation");
  }
  Rotation6D r;
  r.head<3>() = R.col(0);
  r.tail<3>() = R.col(1);
  return r;
}

Rotation6D orthonormalize_sixd(const Rotation6D& r) {
  const Mat3 R = sixd_to_matrix(r);
  Rotation6D out;
  out.head<3>() = R.col(0);
  out.tail<3>() = R.col(1);
  return out;
}

Mat3 rot_y(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Mat3 R;
  R << c, 0.0, s,
       0.0, 1.0, 0.0,
       -s, 0.0, c;
  return R;
}

Mat3 axis_angle(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

double heading_yaw(const Mat3& R) {
  const Vec3 z = R.col(2);
  return std::atan2(z.x(), z.z());
}

double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a <= 0.0) a += 2.0 * kPi;
  return a - kPi;
}

}  // namespace stride
