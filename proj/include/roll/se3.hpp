#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace roll {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Quat = Eigen::Quaterniond;

// se(3) tangent vector ordered (rho, phi): translational part first.
using Tangent = Vec6;

/// Rigid transform stored as position and unit quaternion. The quaternion is
/// renormalized on construction and after every operation.
struct Pose {
  Vec3 p = Vec3::Zero();
  Quat q = Quat::Identity();

  Pose() = default;
  Pose(const Vec3& position, const Quat& rotation);

  static Pose identity() { return {}; }
  static Pose translation(double x, double y, double z);
  static Pose rot_x(double angle);
  static Pose rot_y(double angle);
  static Pose rot_z(double angle);

  Mat3 rotation() const { return q.toRotationMatrix(); }
  Vec3 apply(const Vec3& x) const { return q * x + p; }
};

Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& a);
inline Pose operator*(const Pose& a, const Pose& b) { return compose(a, b); }

/// Rotation angle of q in [0, pi].
double rotation_angle(const Quat& q);

Mat3 skew(const Vec3& v);

Mat3 so3_exp(const Vec3& phi);
Quat so3_exp_quat(const Vec3& phi);
/// Throws DegenerateRotation when the angle is within 1e-6 of pi.
Vec3 so3_log(const Quat& q);

Mat3 so3_left_jacobian(const Vec3& phi);
Mat3 so3_left_jacobian_inv(const Vec3& phi);
Mat3 so3_right_jacobian_inv(const Vec3& phi);

Pose se3_exp(const Tangent& xi);
/// Throws DegenerateRotation when the angle is within 1e-6 of pi.
Tangent se3_log(const Pose& a);

/// Adjoint for the (rho, phi) ordering: Ad(T) * xi = Log(T Exp(xi) T^-1).
Mat6 se3_adjoint(const Pose& a);
Mat6 se3_right_jacobian(const Tangent& xi);
Mat6 se3_right_jacobian_inv(const Tangent& xi);

/// Pose difference by element-wise subtraction: positions, then imaginary
/// quaternion parts. b.q is sign-flipped first when dot(a.q, b.q) < 0.
Vec6 ominus(const Pose& a, const Pose& b);

/// Quaternion with non-negative scalar part representing the same rotation.
Quat canonical(const Quat& q);

bool is_finite(const Pose& a);

}  // namespace roll
