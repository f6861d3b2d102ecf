#include "roll/error.hpp"
#include "roll/sim.hpp"
#include "util.hpp"

using namespace roll;

namespace {

constexpr double kPi = 3.14159265358979323846;

SensorModel single_ring(double elevation_deg, int steps = 900) {
  SensorModel s;
  s.elevations_deg = {elevation_deg};
  s.azimuth_steps = steps;
  return s;
}

bool same_points(const PointCloud& a, const PointCloud& b) { return a.points == b.points; }

}  // namespace

TEST_SUITE("examples") {
  TEST_CASE("raycast inside a 10 m box") {
    World w;
    w.add(Primitive::box(Vec3::Zero(), 0.0, Vec3(10, 10, 10)));
    const Scan s = raycast_scan(w, single_ring(0.0, 360), Pose::identity(), 1);
    REQUIRE(s.cloud.size() == 360);
    for (int j : {0, 90, 180, 270}) {
      const Vec3& p = s.cloud.points[static_cast<std::size_t>(j)];
      CHECK(std::abs(p.norm() - 5.0) < 1e-9);
      CHECK(std::abs(std::abs(p.x()) + std::abs(p.y()) - 5.0) < 1e-9);
    }
    for (const auto& p : s.cloud.points) CHECK(std::max(std::abs(p.x()), std::abs(p.y())) == doctest::Approx(5.0));
  }

  TEST_CASE("ground ring at -15 degrees from 1.5 m") {
    World w;
    w.add(Primitive::plane(Vec3::Zero(), Vec3::UnitZ()));
    const Scan s = raycast_scan(w, single_ring(-15.0), Pose::translation(0, 0, 1.5), 1);
    REQUIRE(s.cloud.size() == 900);
    const double expect = 1.5 / std::sin(15.0 * kPi / 180.0);
    CHECK(expect == doctest::Approx(5.796).epsilon(1e-4));
    for (const auto& p : s.cloud.points) REQUIRE(std::abs(p.norm() - expect) < 1e-9);
  }

  TEST_CASE("same seed gives bit-identical clouds") {
    World w;
    w.add(Primitive::plane(Vec3::Zero(), Vec3::UnitZ()));
    w.add(Primitive::cylinder(Vec3(5, 1, 2), 0.5, 4));
    SensorModel s = SensorModel::default16();
    s.range_noise = 0.02;
    const Pose at = Pose::translation(0, 0, 1.8);
    CHECK(same_points(raycast_scan(w, s, at, 7).cloud, raycast_scan(w, s, at, 7).cloud));
    CHECK_FALSE(same_points(raycast_scan(w, s, at, 7).cloud, raycast_scan(w, s, at, 8).cloud));
  }

  TEST_CASE("trajectory presets") {
    const Trajectory loop = make_trajectory(trajectory_preset(TrajectoryKind::Loop, 20.0));
    CHECK(loop.size() == 1257);
    CHECK(loop.back().t == doctest::Approx(125.6));
    CHECK((loop.front().pose.p - loop.back().pose.p).norm() < 1e-6);

    const Pose origin = Pose::translation(3, 4, 1.2) * Pose::rot_z(0.3);
    const Trajectory corr = make_trajectory(trajectory_preset(TrajectoryKind::Corridor, 30.0, origin));
    CHECK(roll::test::pose_distance(corr.front().pose, origin) < 1e-12);
    for (const auto& tp : corr) {
      REQUIRE(rotation_angle(tp.pose.q.conjugate() * origin.q) < 1e-12);
      const Vec3 local = origin.q.conjugate() * (tp.pose.p - origin.p);
      REQUIRE(std::abs(local.y()) < 1e-9);
    }
    CHECK(corr.size() == 300);
    const Trajectory fig = make_trajectory(trajectory_preset(TrajectoryKind::Figure8, 10.0, origin));
    CHECK(roll::test::pose_distance(fig.front().pose, origin) < 1e-12);
  }

  TEST_CASE("drift_odometry examples") {
    const Pose origin = Pose::translation(2, -1, 0) * Pose::rot_z(0.8);
    const Trajectory truth = make_trajectory(trajectory_preset(TrajectoryKind::Loop, 20.0, origin));
    const Trajectory clean = drift_odometry(truth, OdomModel{});
    for (std::size_t k = 0; k < truth.size(); k += 37) {
      REQUIRE(roll::test::pose_distance(clean[k].pose, inverse(truth.front().pose) * truth[k].pose) < 1e-9);
    }

    const Trajectory line = make_trajectory(trajectory_preset(TrajectoryKind::Corridor, 100.0));
    OdomModel m;
    m.drift_per_meter(0) = 0.01;
    const Trajectory drifted = drift_odometry(line, m);
    const double final_drift = (drifted.back().pose.p - line.back().pose.p).norm();
    CHECK(final_drift == doctest::Approx(1.0).epsilon(0.02));

    m.noise_sigma << 0.01, 0.01, 0.01, 0.001, 0.001, 0.001;
    m.seed = 3;
    const Trajectory a = drift_odometry(line, m), b = drift_odometry(line, m);
    for (std::size_t k = 0; k < a.size(); ++k) {
      REQUIRE(a[k].pose.p == b[k].pose.p);
      REQUIRE(a[k].pose.q.coeffs() == b[k].pose.q.coeffs());
    }
  }

  TEST_CASE("scene change examples") {
    World w;
    w.add(Primitive::plane(Vec3::Zero(), Vec3::UnitZ()));
    const std::uint32_t car = w.add(Primitive::box(Vec3(8, 0, 1), 0.0, Vec3(4, 2, 2), "car"));
    CHECK(w.has_tag("car"));
    const World removed = apply_scene_change(w, SceneChange::remove("car"));
    CHECK_FALSE(removed.has_tag("car"));
    CHECK(removed.find(car) == nullptr);
    CHECK_THROWS_AS(apply_scene_change(removed, SceneChange::remove("car")), Error);

    const World added = apply_scene_change(removed, SceneChange::add(Primitive::box(Vec3(10, 0, 2), 0.0, Vec3(2, 2, 4), "crate")));
    const Scan s = raycast_scan(added, single_ring(0.0, 360), Pose::translation(0, 0, 1.0), 1);
    REQUIRE_FALSE(s.cloud.empty());
    CHECK(std::abs(s.cloud.points[0].x() - 9.0) < 1e-9);

    const World same = apply_scene_change(w, SceneChange::move(car, Pose::identity()));
    REQUIRE(same.size() == w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
      CHECK(same.primitives()[i].pose.p == w.primitives()[i].pose.p);
      CHECK(same.primitives()[i].dims == w.primitives()[i].dims);
    }
    const World moved = apply_scene_change(w, SceneChange::move(car, Pose::translation(0, 3, 0)));
    CHECK((moved.find(car)->pose.p - Vec3(8, 3, 1)).norm() < 1e-12);
  }
}

TEST_SUITE("properties") {
  TEST_CASE("ring layout and range limits") {
    World w;
    w.add(Primitive::plane(Vec3::Zero(), Vec3::UnitZ()));
    w.add(Primitive::box(Vec3(0, 0, 0), 0.0, Vec3(200, 200, 200)));
    const SensorModel s = SensorModel::default16();
    const Scan scan = raycast_scan(w, s, Pose::translation(0, 0, 1.8), 2);
    REQUIRE(scan.rings.size() == s.elevations_deg.size() + 1);
    CHECK(scan.rings.front() == 0);
    CHECK(scan.rings.back() == scan.cloud.size());
    for (const auto& p : scan.cloud.points) {
      REQUIRE(p.norm() <= s.max_range + 1e-9);
      REQUIRE(p.norm() >= s.min_range);
    }
  }

  TEST_CASE("hashed_gaussian is deterministic and roughly standard") {
    double sum = 0.0, sq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      const double g = hashed_gaussian(9, static_cast<std::uint64_t>(i), 1, 2);
      REQUIRE(g == hashed_gaussian(9, static_cast<std::uint64_t>(i), 1, 2));
      sum += g;
      sq += g * g;
    }
    CHECK(std::abs(sum / n) < 0.03);
    CHECK(std::abs(sq / n - 1.0) < 0.05);
  }
}

TEST_SUITE("parallel") {
  TEST_CASE("parallel raycast matches the serial reference") {
    World w;
    w.add(Primitive::plane(Vec3::Zero(), Vec3::UnitZ()));
    for (int i = 0; i < 20; ++i) {
      const double a = i * 0.314;
      w.add(Primitive::box(Vec3(15 * std::cos(a), 15 * std::sin(a), 2), a, Vec3(3, 4, 4)));
      w.add(Primitive::cylinder(Vec3(7 * std::cos(a), 7 * std::sin(a), 2), 0.3, 4));
    }
    SensorModel s = SensorModel::default16();
    s.range_noise = 0.01;
    const Pose at = Pose::translation(0.5, -0.2, 1.8) * Pose::rot_z(0.3);
    const Scan par = raycast_scan(w, s, at, 5, Exec::Parallel);
    const Scan ser = raycast_scan(w, s, at, 5, Exec::Serial);
    CHECK(par.cloud.points == ser.cloud.points);
    CHECK(par.rings == ser.rings);
  }
}
