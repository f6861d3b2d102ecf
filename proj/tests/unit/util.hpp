#pragma once

#include <doctest.h>

#include <cmath>
#include <random>

#include "roll/se3.hpp"

namespace roll::test {

inline Vec3 random_vec(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

inline Quat random_quat(std::mt19937_64& rng, double max_angle = 3.0) {
  std::normal_distribution<double> n;
  Vec3 axis(n(rng), n(rng), n(rng));
  axis.normalize();
  std::uniform_real_distribution<double> u(0.0, max_angle);
  return Quat(Eigen::AngleAxisd(u(rng), axis));
}

inline Pose random_pose(std::mt19937_64& rng, double trans = 5.0, double max_angle = 3.0) {
  return {random_vec(rng, trans), random_quat(rng, max_angle)};
}

inline double pose_distance(const Pose& a, const Pose& b) {
  return (a.p - b.p).norm() + rotation_angle(a.q.conjugate() * b.q);
}

// Frobenius norm of the difference relative to the reference, floored at 1.
template <typename A, typename B>
double relative_error(const A& analytic, const B& reference) {
  return (analytic - reference).norm() / std::max(1.0, reference.norm());
}

}  // namespace roll::test
