#include "roll/se3.hpp"

#include <cmath>

#include "roll/error.hpp"

namespace roll {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSmallAngle = 1e-6;
constexpr double kLogLimit = kPi - 1e-6;

// Series coefficients of the SE(3) Q block, used below this angle.
constexpr double kSeriesAngle = 1e-2;

Mat3 se3_q_block(const Vec3& rho, const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 rx = skew(rho);
  const Mat3 px = skew(phi);
  const double t2 = theta * theta;
  double c2, c3, c4;
  if (theta < kSeriesAngle) {
    c2 = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
    c3 = 1.0 / 24.0 - t2 / 720.0 + t2 * t2 / 40320.0;
    c4 = 1.0 / 120.0 - t2 / 2520.0 + t2 * t2 / 120960.0;
  } else {
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    c2 = (theta - s) / (t2 * theta);
    c3 = (t2 + 2.0 * c - 2.0) / (2.0 * t2 * t2);
    c4 = (2.0 * theta - 3.0 * s + theta * c) / (2.0 * t2 * t2 * theta);
  }
  const Mat3 pr = px * rx;
  const Mat3 rp = rx * px;
  const Mat3 prp = pr * px;
  return 0.5 * rx + c2 * (pr + rp + prp) + c3 * (px * pr + rp * px - 3.0 * prp) +
         c4 * (prp * px + px * prp);
}

}  // namespace

Pose::Pose(const Vec3& position, const Quat& rotation) : p(position), q(rotation.normalized()) {}

Pose Pose::translation(double x, double y, double z) { return {Vec3(x, y, z), Quat::Identity()}; }

Pose Pose::rot_x(double angle) {
  return {Vec3::Zero(), Quat(Eigen::AngleAxisd(angle, Vec3::UnitX()))};
}

Pose Pose::rot_y(double angle) {
  return {Vec3::Zero(), Quat(Eigen::AngleAxisd(angle, Vec3::UnitY()))};
}

Pose Pose::rot_z(double angle) {
  return {Vec3::Zero(), Quat(Eigen::AngleAxisd(angle, Vec3::UnitZ()))};
}

Pose compose(const Pose& a, const Pose& b) { return {a.q * b.p + a.p, a.q * b.q}; }

Pose inverse(const Pose& a) {
  const Quat qi = a.q.conjugate();
  return {-(qi * a.p), qi};
}

double rotation_angle(const Quat& q) {
  return 2.0 * std::atan2(q.vec().norm(), std::abs(q.w()));
}

Mat3 skew(const Vec3& v) {
  Mat3 s;
  // clang-format off
  s <<    0.0, -v.z(),  v.y(),
        v.z(),    0.0, -v.x(),
       -v.y(),  v.x(),    0.0;
  // clang-format on
  return s;
}

Quat so3_exp_quat(const Vec3& phi) {
  const double theta = phi.norm();
  Quat q;
  if (theta < kSmallAngle) {
    q.w() = 1.0 - theta * theta / 8.0;
    q.vec() = 0.5 * phi * (1.0 - theta * theta / 24.0);
  } else {
    q.w() = std::cos(0.5 * theta);
    q.vec() = std::sin(0.5 * theta) / theta * phi;
  }
  return q.normalized();
}

Mat3 so3_exp(const Vec3& phi) { return so3_exp_quat(phi).toRotationMatrix(); }

Vec3 so3_log(const Quat& q_in) {
  const Quat q = canonical(q_in.normalized());
  const double n = q.vec().norm();
  const double w = q.w();
  const double theta = 2.0 * std::atan2(n, w);
  if (theta >= kLogLimit) {
    throw Error(ErrorCode::DegenerateRotation, "rotation angle too close to pi for log map");
  }
  double scale;
  if (theta < kSmallAngle) {
    scale = 2.0 / w * (1.0 - n * n / (3.0 * w * w));
  } else {
    scale = theta / n;
  }
  return scale * q.vec();
}

Mat3 so3_left_jacobian(const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 px = skew(phi);
  if (theta < kSmallAngle) {
    return Mat3::Identity() + 0.5 * px + px * px / 6.0;
  }
  const double t2 = theta * theta;
  return Mat3::Identity() + (1.0 - std::cos(theta)) / t2 * px +
         (theta - std::sin(theta)) / (t2 * theta) * px * px;
}

Mat3 so3_left_jacobian_inv(const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 px = skew(phi);
  double coef;
  if (theta < 1e-4) {
    coef = 1.0 / 12.0 + theta * theta / 720.0;
  } else {
    coef = 1.0 / (theta * theta) - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  }
  return Mat3::Identity() - 0.5 * px + coef * px * px;
}

Mat3 so3_right_jacobian_inv(const Vec3& phi) { return so3_left_jacobian_inv(-phi); }

Pose se3_exp(const Tangent& xi) {
  const Vec3 rho = xi.head<3>();
  const Vec3 phi = xi.tail<3>();
  return {so3_left_jacobian(phi) * rho, so3_exp_quat(phi)};
}

Tangent se3_log(const Pose& a) {
  const Vec3 phi = so3_log(a.q);
  Tangent xi;
  xi.head<3>() = so3_left_jacobian_inv(phi) * a.p;
  xi.tail<3>() = phi;
  return xi;
}

Mat6 se3_adjoint(const Pose& a) {
  const Mat3 r = a.rotation();
  Mat6 ad = Mat6::Zero();
  ad.topLeftCorner<3, 3>() = r;
  ad.topRightCorner<3, 3>() = skew(a.p) * r;
  ad.bottomRightCorner<3, 3>() = r;
  return ad;
}

Mat6 se3_right_jacobian(const Tangent& xi) {
  // Jr(xi) = Jl(-xi)
  const Vec3 rho = -xi.head<3>();
  const Vec3 phi = -xi.tail<3>();
  Mat6 j = Mat6::Zero();
  const Mat3 jl = so3_left_jacobian(phi);
  j.topLeftCorner<3, 3>() = jl;
  j.bottomRightCorner<3, 3>() = jl;
  j.topRightCorner<3, 3>() = se3_q_block(rho, phi);
  return j;
}

Mat6 se3_right_jacobian_inv(const Tangent& xi) {
  const Vec3 rho = -xi.head<3>();
  const Vec3 phi = -xi.tail<3>();
  const Mat3 a_inv = so3_left_jacobian_inv(phi);
  Mat6 j = Mat6::Zero();
  j.topLeftCorner<3, 3>() = a_inv;
  j.bottomRightCorner<3, 3>() = a_inv;
  j.topRightCorner<3, 3>() = -a_inv * se3_q_block(rho, phi) * a_inv;
  return j;
}

Vec6 ominus(const Pose& a, const Pose& b) {
  Quat qb = b.q;
  if (a.q.dot(qb) < 0.0) {
    qb.coeffs() = -qb.coeffs();
  }
  Vec6 d;
  d.head<3>() = a.p - b.p;
  d.tail<3>() = a.q.vec() - qb.vec();
  return d;
}

Quat canonical(const Quat& q) {
  if (q.w() < 0.0) {
    return Quat(-q.w(), -q.x(), -q.y(), -q.z());
  }
  return q;
}

bool is_finite(const Pose& a) { return a.p.allFinite() && a.q.coeffs().allFinite(); }

}  // namespace roll
