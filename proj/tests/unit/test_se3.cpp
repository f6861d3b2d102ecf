#include "roll/error.hpp"
#include "roll/se3.hpp"
#include "util.hpp"

using namespace roll;
using roll::test::pose_distance;
using roll::test::random_pose;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_SUITE("examples") {
  TEST_CASE("compose examples") {
    std::mt19937_64 rng(1);
    const Pose x = random_pose(rng);
    CHECK(pose_distance(compose(Pose::identity(), x), x) < 1e-12);

    const Pose t = compose(Pose::translation(1, 0, 0), Pose::translation(0, 1, 0));
    CHECK((t.p - Vec3(1, 1, 0)).norm() < 1e-12);

    const Pose r = compose(Pose::rot_z(kPi / 2), Pose::translation(1, 0, 0));
    CHECK((r.p - Vec3(0, 1, 0)).norm() < 1e-12);
    CHECK(rotation_angle(r.q.conjugate() * Pose::rot_z(kPi / 2).q) < 1e-12);
  }

  TEST_CASE("inverse examples") {
    CHECK(pose_distance(inverse(Pose::identity()), Pose::identity()) < 1e-12);
    CHECK((inverse(Pose::translation(1, 2, 3)).p - Vec3(-1, -2, -3)).norm() < 1e-12);
    std::mt19937_64 rng(2);
    for (int i = 0; i < 100; ++i) {
      const Pose x = random_pose(rng);
      CHECK(pose_distance(inverse(inverse(x)), x) < 1e-9);
    }
  }

  TEST_CASE("log and exp examples") {
    CHECK(se3_log(Pose::identity()).norm() == 0.0);
    const double theta = 0.7;
    Tangent xi = Tangent::Zero();
    xi(5) = theta;
    const Pose r = se3_exp(xi);
    CHECK(r.p.norm() < 1e-12);
    CHECK(rotation_angle(r.q.conjugate() * Pose::rot_z(theta).q) < 1e-12);

    std::mt19937_64 rng(3);
    for (int i = 0; i < 1000; ++i) {
      const Pose x = random_pose(rng, 5.0, 3.1);
      const Pose y = se3_exp(se3_log(x));
      REQUIRE((y.p - x.p).norm() < 1e-9);
      REQUIRE(rotation_angle(y.q.conjugate() * x.q) < 1e-9);
    }
  }

  TEST_CASE("log near pi is degenerate") {
    try {
      se3_log(Pose::rot_x(kPi - 1e-8));
      FAIL("expected DegenerateRotation");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DegenerateRotation);
    }
    CHECK_NOTHROW(se3_log(Pose::rot_x(kPi - 1e-3)));
  }

  TEST_CASE("ominus examples") {
    std::mt19937_64 rng(4);
    const Pose x = random_pose(rng);
    CHECK(ominus(x, x).norm() == 0.0);

    Vec6 expect;
    expect << 1, 0, 0, 0, 0, 0;
    CHECK((ominus(Pose::translation(1, 0, 0), Pose::identity()) - expect).norm() < 1e-15);

    const double eps = 0.01;
    const Vec6 d = ominus(Pose::rot_z(eps), Pose::identity());
    CHECK((d.tail<3>() - Vec3(0, 0, std::sin(eps / 2))).norm() < 1e-12);
  }
}

TEST_SUITE("properties") {
  TEST_CASE("quaternions stay unit and P * P^-1 is identity") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 1000; ++i) {
      const Pose a = random_pose(rng);
      const Pose b = random_pose(rng);
      const Pose c = a * b;
      REQUIRE(std::abs(c.q.norm() - 1.0) < 1e-9);
      const Pose e = a * inverse(a);
      REQUIRE(e.p.norm() < 1e-9);
      REQUIRE(rotation_angle(e.q) < 1e-9);
    }
    const Pose unnormalized(Vec3::Zero(), Quat(2.0, 0.0, 0.0, 0.0));
    CHECK(std::abs(unnormalized.q.norm() - 1.0) < 1e-15);
  }

  TEST_CASE("compose is associative") {
    std::mt19937_64 rng(6);
    for (int i = 0; i < 1000; ++i) {
      const Pose a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
      REQUIRE(pose_distance((a * b) * c, a * (b * c)) < 1e-9);
    }
  }

  TEST_CASE("ominus vanishes exactly for equal poses up to sign") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200; ++i) {
      const Pose a = random_pose(rng);
      Pose flipped = a;
      flipped.q.coeffs() = -a.q.coeffs();
      REQUIRE(ominus(a, flipped).norm() < 1e-15);
      const Pose b = a * Pose::translation(1e-3, 0, 0);
      REQUIRE(ominus(a, b).norm() > 0.0);
    }
  }

  TEST_CASE("small-angle log is finite and accurate") {
    Tangent xi;
    xi << 0.3, -0.2, 0.1, 1e-9, -2e-9, 5e-10;
    const Tangent back = se3_log(se3_exp(xi));
    CHECK((back - xi).norm() < 1e-12);
    CHECK(se3_log(Pose::identity()).allFinite());
  }

  TEST_CASE("adjoint transports tangents") {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 200; ++i) {
      const Pose T = random_pose(rng, 3.0, 2.0);
      Tangent xi = Tangent::Random() * 0.3;
      const Tangent lhs = se3_adjoint(T) * xi;
      const Tangent rhs = se3_log(T * se3_exp(xi) * inverse(T));
      REQUIRE((lhs - rhs).norm() < 1e-9);
    }
  }

  TEST_CASE("canonical flips to a non-negative scalar") {
    const Quat q(-0.5, 0.5, 0.5, 0.5);
    const Quat c = canonical(q);
    CHECK(c.w() >= 0.0);
    CHECK(rotation_angle(c.conjugate() * q) < 1e-12);
  }
}
