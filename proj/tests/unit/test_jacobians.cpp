#include <functional>

#include "roll/fusion.hpp"
#include "roll/matching.hpp"
#include "roll/temporal.hpp"
#include "util.hpp"

using namespace roll;
using roll::test::random_pose;
using roll::test::random_vec;

namespace {

constexpr int kInstances = 1000;
constexpr double kStep = 1e-6;
constexpr double kTol = 1e-5;

template <int Rows>
using Out = Eigen::Matrix<double, Rows, 1>;

// Central differences of f over a 6-dof perturbation.
template <int Rows>
Eigen::Matrix<double, Rows, 6> numeric(const std::function<Out<Rows>(const Vec6&)>& f) {
  Eigen::Matrix<double, Rows, 6> J;
  for (int k = 0; k < 6; ++k) {
    Vec6 d = Vec6::Zero();
    d(k) = kStep;
    J.col(k) = (f(d) - f(-d)) / (2.0 * kStep);
  }
  return J;
}

template <class A, class B>
double rel(const A& analytic, const B& fd) {
  return (analytic - fd).norm() / std::max(fd.norm(), 1e-12);
}

Pose left(const Pose& T, const Vec6& d) { return se3_exp(d) * T; }
Pose right(const Pose& T, const Vec6& d) { return T * se3_exp(d); }
Pose additive(const Pose& T, const Vec6& d) {
  return {T.p + d.head<3>(), T.q * so3_exp_quat(d.tail<3>())};
}

Vec6 small(std::mt19937_64& rng, double s) {
  std::uniform_real_distribution<double> u(-s, s);
  Vec6 v;
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_SUITE("jacobians") {
  TEST_CASE("line_residual") {
    std::mt19937_64 rng(101);
    double worst = 0.0;
    for (int n = 0; n < kInstances; ++n) {
      const Pose T = random_pose(rng, 10.0);
      const Vec3 x = random_vec(rng, 20.0), a = random_vec(rng, 20.0);
      const Vec3 b = a + random_vec(rng, 2.0);
      Row6 J;
      line_residual(T, x, a, b, &J);
      const auto fd = numeric<1>([&](const Vec6& d) {
        return Out<1>(line_residual(left(T, d), x, a, b));
      });
      worst = std::max(worst, rel(J, fd));
    }
    CHECK(worst < kTol);
  }

  TEST_CASE("line_offset") {
    std::mt19937_64 rng(102);
    double worst = 0.0;
    for (int n = 0; n < kInstances; ++n) {
      const Pose T = random_pose(rng, 10.0);
      const Vec3 x = random_vec(rng, 20.0), a = random_vec(rng, 20.0);
      const Vec3 b = a + random_vec(rng, 2.0);
      Mat36 J;
      line_offset(T, x, a, b, &J);
      const auto fd = numeric<3>([&](const Vec6& d) { return line_offset(left(T, d), x, a, b); });
      worst = std::max(worst, rel(J, fd));
    }
    CHECK(worst < kTol);
  }

  TEST_CASE("plane_residual") {
    std::mt19937_64 rng(103);
    double worst = 0.0;
    for (int n = 0; n < kInstances; ++n) {
      const Pose T = random_pose(rng, 10.0);
      const Vec3 x = random_vec(rng, 20.0), a = random_vec(rng, 20.0);
      const Vec3 b = a + random_vec(rng, 2.0), c = a + random_vec(rng, 2.0);
      Row6 J;
      plane_residual(T, x, a, b, c, &J);
      const auto fd = numeric<1>([&](const Vec6& d) {
        return Out<1>(plane_residual(left(T, d), x, a, b, c));
      });
      worst = std::max(worst, rel(J, fd));
    }
    CHECK(worst < kTol);
  }

  TEST_CASE("odom_residual") {
    std::mt19937_64 rng(104);
    double worst_i = 0.0, worst_j = 0.0;
    for (int n = 0; n < kInstances; ++n) {
      const Pose xi = random_pose(rng, 10.0);
      const Pose xj = random_pose(rng, 10.0);
      const Pose meas = inverse(xi) * xj * se3_exp(small(rng, 0.5));
      Mat6 Ji, Jj;
      odom_residual(xi, xj, meas, &Ji, &Jj);
      const auto fdi = numeric<6>([&](const Vec6& d) { return odom_residual(right(xi, d), xj, meas); });
      const auto fdj = numeric<6>([&](const Vec6& d) { return odom_residual(xi, right(xj, d), meas); });
      worst_i = std::max(worst_i, rel(Ji, fdi));
      worst_j = std::max(worst_j, rel(Jj, fdj));
    }
    CHECK(worst_i < kTol);
    CHECK(worst_j < kTol);
  }

  TEST_CASE("unary_residual") {
    std::mt19937_64 rng(105);
    double worst = 0.0;
    for (int n = 0; n < kInstances; ++n) {
      const Pose x = random_pose(rng, 10.0);
      const Pose meas = x * se3_exp(small(rng, 0.5));
      Mat6 J;
      unary_residual(x, meas, &J);
      const auto fd = numeric<6>([&](const Vec6& d) { return unary_residual(right(x, d), meas); });
      worst = std::max(worst, rel(J, fd));
    }
    CHECK(worst < kTol);
  }

  TEST_CASE("fusion residuals") {
    std::mt19937_64 rng(106);
    double worst_o = 0.0, worst_g = 0.0;
    for (int n = 0; n < kInstances; ++n) {
      const Pose oi = random_pose(rng, 10.0);
      const Pose oj = oi * se3_exp(small(rng, 1.0));
      const Pose D = random_pose(rng, 5.0);
      const Pose xi = D * oi * se3_exp(small(rng, 0.1));
      const Pose xj = D * oj * se3_exp(small(rng, 0.1));
      Mat6 Ji, Jj, Jg;
      fusion_odom_residual(xi, xj, oi, oj, &Ji, &Jj);
      const auto fdi = numeric<6>([&](const Vec6& d) { return fusion_odom_residual(additive(xi, d), xj, oi, oj); });
      const auto fdj = numeric<6>([&](const Vec6& d) { return fusion_odom_residual(xi, additive(xj, d), oi, oj); });
      worst_o = std::max({worst_o, rel(Ji, fdi), rel(Jj, fdj)});

      const Pose gm = xi * se3_exp(small(rng, 0.1));
      fusion_gm_residual(xi, gm, &Jg);
      const auto fdg = numeric<6>([&](const Vec6& d) { return fusion_gm_residual(additive(xi, d), gm); });
      worst_g = std::max(worst_g, rel(Jg, fdg));
    }
    CHECK(worst_o < kTol);
    CHECK(worst_g < kTol);
  }
}
