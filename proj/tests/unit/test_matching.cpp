#include "roll/error.hpp"
#include "roll/matching.hpp"
#include "roll/sim.hpp"
#include "util.hpp"

using namespace roll;
using roll::test::random_pose;
using roll::test::random_vec;

namespace {

constexpr double kDeg = 3.14159265358979323846 / 180.0;

World box_room() {
  World w;
  w.add(Primitive::plane(Vec3::Zero(), Vec3::UnitZ()));
  w.add(Primitive::box(Vec3(0, 15, 3), 0, Vec3(30, 0.5, 6), "wall"));
  w.add(Primitive::box(Vec3(0, -15, 3), 0, Vec3(30, 0.5, 6), "wall"));
  w.add(Primitive::box(Vec3(15, 0, 3), 0, Vec3(0.5, 30, 6), "wall"));
  w.add(Primitive::box(Vec3(-15, 0, 3), 0, Vec3(0.5, 30, 6), "wall"));
  w.add(Primitive::box(Vec3(6, 5, 1.5), 0.4, Vec3(2, 3, 3), "crate"));
  w.add(Primitive::box(Vec3(-7, -4, 1.5), -0.3, Vec3(3, 2, 3), "crate"));
  w.add(Primitive::box(Vec3(-5, 8, 2), 0.9, Vec3(1.5, 1.5, 4), "crate"));
  w.add(Primitive::cylinder(Vec3(4, -7, 2.5), 0.25, 5, "pole"));
  w.add(Primitive::cylinder(Vec3(-9, 3, 2.5), 0.25, 5));
  return w;
}

FeatureFrame scan_features(const World& w, const Pose& at, std::uint64_t seed, double leaf = 0.4) {
  const Scan s = raycast_scan(w, SensorModel::default16(), at, seed);
  return downsample_features(extract_features(s.cloud, s.rings), leaf);
}

GlobalMap room_map(const World& w) {
  GlobalMap map;
  for (int k = 0; k < 5; ++k) {
    const Pose p = Pose::translation(-2.0 + k, 0.5 * k - 1, 1.8) * Pose::rot_z(0.2 * k);
    const Scan s = raycast_scan(w, SensorModel::default16(), p, 10 + k);
    map.insert(make_keyframe(k, p, extract_features(s.cloud, s.rings), 0.4));
  }
  return map;
}

LocalMap restrict(const LocalMap& lm, double max_x) {
  LocalMap out = lm;
  out.edge_map.points.clear();
  out.surf_map.points.clear();
  for (const auto& p : lm.edge_map.points) if (p.x() < max_x) out.edge_map.points.push_back(p);
  for (const auto& p : lm.surf_map.points) if (p.x() < max_x) out.surf_map.points.push_back(p);
  out.edge_index = SpatialIndex(out.edge_map.points);
  out.surf_index = SpatialIndex(out.surf_map.points);
  return out;
}

}  // namespace

TEST_SUITE("examples") {
  TEST_CASE("point_to_line examples") {
    const Vec3 o(0, 0, 0), x(1, 0, 0);
    CHECK(point_to_line({0.5, 0, 0}, o, x) == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(std::abs(point_to_line({0, 1, 0}, o, x) - 1.0) < 1e-6);
    CHECK(std::abs(point_to_line({2, 3, 6}, o, x) - std::sqrt(45.0)) < 1e-6);
    try {
      point_to_line({0, 1, 0}, o, o);
      FAIL("expected DegenerateCorrespondence");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DegenerateCorrespondence);
    }
  }

  TEST_CASE("point_to_plane examples") {
    const Vec3 o(0, 0, 0), x(1, 0, 0), y(0, 1, 0), z(0, 0, 1);
    CHECK(std::abs(point_to_plane({0.3, 0.7, 0}, o, x, y)) < 1e-6);
    CHECK(std::abs(point_to_plane({5, 5, 2}, o, x, y) - 2.0) < 1e-6);
    CHECK(std::abs(point_to_plane({1, 1, 1}, x, y, z) - 2.0 / std::sqrt(3.0)) < 1e-6);
    CHECK_THROWS_AS(point_to_plane({1, 1, 1}, o, x, Vec3(2, 0, 0)), Error);
  }

  TEST_CASE("associate on a frame identical to the local map") {
    const World w = box_room();
    GlobalMap map;
    const Pose T = Pose::translation(0.3, 0.2, 1.8) * Pose::rot_z(0.5);
    map.insert(make_keyframe(0, T, scan_features(w, T, 3), 0.4));
    const LocalMap local = build_local_map(map, T, 25.0);
    FeatureFrame f;
    f.edges = transform_cloud(local.edge_map, inverse(T), FrameId::Lidar);
    f.surfaces = transform_cloud(local.surf_map, inverse(T), FrameId::Lidar);
    const auto corrs = associate(f, T, local);
    REQUIRE(corrs.size() == f.size());
    for (double r : stacked_residuals(corrs, T)) CHECK(r < 1e-9);
  }

  TEST_CASE("associate with a 0.1 m offset on a plane scene") {
    World w;
    w.add(Primitive::plane(Vec3(4, 0, 0), Vec3::UnitX(), 0.0, 0.0, "wall"));
    const Pose T = Pose::translation(0, 0, 1.8);
    GlobalMap map;
    map.insert(make_keyframe(0, T, scan_features(w, T, 1), 0.4));
    const LocalMap local = build_local_map(map, T, 25.0);
    const FeatureFrame f = scan_features(w, T, 1);
    const Pose guess = Pose::translation(0.1, 0, 1.8);
    const auto corrs = associate(f, guess, local);
    const auto res = stacked_residuals(corrs, guess);
    std::size_t surf = 0;
    for (std::size_t i = 0; i < corrs.size(); ++i) {
      if (corrs[i].kind == Correspondence::Kind::SurfPlane && corrs[i].valid) {
        CHECK(std::abs(res[i] - 0.1) < 1e-4);
        ++surf;
      }
    }
    CHECK(surf > 50);
  }

  TEST_CASE("associate on an empty frame") {
    const World w = box_room();
    const LocalMap local = build_local_map(room_map(w), Pose::translation(0, 0, 1.8), 25.0);
    CHECK(associate(FeatureFrame{}, Pose::identity(), local).empty());
  }

  TEST_CASE("optimize from the truth is a fixed point") {
    const World w = box_room();
    const Pose T = Pose::translation(0.3, 0.2, 1.8) * Pose::rot_z(0.5);
    const FeatureFrame f = scan_features(w, T, 99);
    GlobalMap map;
    map.insert(make_keyframe(0, T, f, 0.4));
    const MatchResult r = optimize(f, T, build_local_map(map, T, 25.0));
    CHECK(r.converged);
    CHECK((r.pose.p - T.p).norm() < 1e-3);
    CHECK(r.inlier_ratio == 1.0);
  }

  TEST_CASE("optimize recovers a 0.3 m / 5 deg perturbation in the box room") {
    const World w = box_room();
    const GlobalMap map = room_map(w);
    const Pose T = Pose::translation(0.3, 0.2, 1.8) * Pose::rot_z(0.5);
    const FeatureFrame f = scan_features(w, T, 99);
    const LocalMap local = build_local_map(map, T, 25.0);
    for (int i = 0; i < 8; ++i) {
      const double a = i * 0.785;
      const Vec3 axis = Vec3(std::cos(1.3 * a), std::sin(1.7 * a), 1.0).normalized();
      const Pose guess(T.p + Vec3(0.3 * std::cos(a), 0.3 * std::sin(a), 0.0),
                       T.q * so3_exp_quat(axis * 5 * kDeg));
      const MatchResult r = optimize(f, guess, local);
      CAPTURE(i);
      CHECK((r.pose.p - T.p).norm() < 0.02);
      CHECK(rotation_angle(r.pose.q.conjugate() * T.q) < 0.2 * kDeg);
    }
  }

  TEST_CASE("deleting the half of the map region the sensor is in drops mu below 0.5") {
    const World w = box_room();
    const Pose T = Pose::translation(4.0, 0.2, 1.8) * Pose::rot_z(0.5);
    const FeatureFrame f = scan_features(w, T, 99);
    const LocalMap full = build_local_map(room_map(w), T, 25.0);
    const MatchResult before = optimize(f, T, full);
    const MatchResult after = optimize(f, T, restrict(full, 0.0));
    CHECK(after.inlier_ratio < 0.5);
    CHECK(before.inlier_ratio > after.inlier_ratio + 0.3);
  }

  TEST_CASE("inlier_ratio examples") {
    CHECK(inlier_ratio(std::vector<double>{0.1, 0.2, 0.3}, 1.0) == 1.0);
    CHECK(inlier_ratio(std::vector<double>{0.5, 1.5}, 1.0) == 0.5);
    CHECK(inlier_ratio(std::vector<double>{}, 1.0) == 0.0);
    CHECK(inlier_ratio(std::vector<double>{1.0}, 1.0) == 0.0);
  }

  TEST_CASE("predict_pose examples") {
    std::mt19937_64 rng(1);
    const Pose o = random_pose(rng);
    CHECK(roll::test::pose_distance(predict_pose(Pose::identity(), o), o) < 1e-12);
    const Pose p = predict_pose(Pose::translation(1, 0, 0), Pose::translation(0, 1, 0));
    CHECK((p.p - Vec3(1, 1, 0)).norm() < 1e-12);

    // odometry starts at identity, so the constant drift is the first truth pose
    const Pose origin = Pose::translation(2.0, -1.0, 0.1) * Pose::rot_z(0.3);
    const Trajectory truth = make_trajectory(trajectory_preset(TrajectoryKind::Loop, 20.0, origin));
    OdomModel om;
    om.noise_sigma << 1e-4, 1e-4, 1e-4, 1e-5, 1e-5, 1e-5;
    om.seed = 4;
    const Trajectory odom = drift_odometry(truth, om);
    double worst = 0.0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
      worst = std::max(worst, (predict_pose(origin, odom[k].pose).p - truth[k].pose.p).norm());
    }
    CHECK(worst < 0.05);
  }
}

TEST_SUITE("properties") {
  TEST_CASE("too few correspondences throws") {
    const World w = box_room();
    const LocalMap local = build_local_map(room_map(w), Pose::translation(0, 0, 1.8), 25.0);
    FeatureFrame f;
    for (int i = 0; i < 10; ++i) f.surfaces.points.emplace_back(3.0 + i, 0.0, -1.8);
    try {
      optimize(f, Pose::translation(0, 0, 1.8), local);
      FAIL("expected InsufficientCorrespondences");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InsufficientCorrespondences);
    }
  }

  TEST_CASE("residual magnitudes agree with the distance functions") {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 500; ++i) {
      const Pose T = random_pose(rng, 3.0, 2.0);
      const Vec3 x = random_vec(rng, 5.0), a = random_vec(rng, 5.0), b = random_vec(rng, 5.0),
                 c = random_vec(rng, 5.0);
      const Vec3 w = T.apply(x);
      REQUIRE(std::abs(line_residual(T, x, a, b) - point_to_line(w, a, b)) < 1e-9);
      REQUIRE(std::abs(line_offset(T, x, a, b).norm() - point_to_line(w, a, b)) < 1e-9);
      REQUIRE(std::abs(std::abs(plane_residual(T, x, a, b, c)) - point_to_plane(w, a, b, c)) < 1e-9);
    }
  }

  TEST_CASE("residuals and mu are invariant to a common rigid motion") {
    const World w = box_room();
    const Pose T = Pose::translation(0.3, 0.2, 1.8) * Pose::rot_z(0.5);
    const FeatureFrame f = scan_features(w, T, 99);
    const GlobalMap map = room_map(w);
    const LocalMap local = build_local_map(map, T, 25.0);
    const auto corrs = associate(f, T, local);
    const auto res = stacked_residuals(corrs, T);

    const Pose M = Pose::translation(3, -2, 0.5) * Pose::rot_z(1.1);
    std::vector<Correspondence> moved = corrs;
    for (auto& c : moved) {
      for (auto& p : c.map_points) p = M.apply(p);
    }
    const auto res_m = stacked_residuals(moved, M * T);
    for (std::size_t i = 0; i < res.size(); ++i) {
      if (corrs[i].defined && corrs[i].near) REQUIRE(std::abs(res[i] - res_m[i]) < 1e-9);
    }
  }
}

TEST_SUITE("parallel") {
  TEST_CASE("associate and normal equations match the serial reference bit for bit") {
    const World w = box_room();
    const Pose T = Pose::translation(0.3, 0.2, 1.8) * Pose::rot_z(0.5);
    const FeatureFrame f = scan_features(w, T, 99);
    const LocalMap local = build_local_map(room_map(w), T, 25.0);
    const Pose guess = T * se3_exp((Vec6() << 0.2, -0.1, 0.05, 0.0, 0.01, 0.03).finished());
    const auto par = associate(f, guess, local, {}, Exec::Parallel);
    const auto ser = associate(f, guess, local, {}, Exec::Serial);
    REQUIRE(par.size() == ser.size());
    for (std::size_t i = 0; i < par.size(); ++i) {
      REQUIRE(par[i].valid == ser[i].valid);
      REQUIRE(par[i].nn_dist == ser[i].nn_dist);
      REQUIRE(par[i].map_points[0] == ser[i].map_points[0]);
    }
    const NormalEquations a = accumulate_normal_equations(par, guess, Exec::Parallel);
    const NormalEquations b = accumulate_normal_equations(ser, guess, Exec::Serial);
    CHECK(a.H == b.H);
    CHECK(a.g == b.g);
    CHECK(a.cost == b.cost);
    CHECK(a.count == b.count);
    CHECK(correspondence_cost(par, guess, Exec::Parallel) == correspondence_cost(ser, guess, Exec::Serial));

    MatchOptions po, so;
    so.exec = Exec::Serial;
    const MatchResult rp = optimize(f, guess, local, po);
    const MatchResult rs = optimize(f, guess, local, so);
    CHECK(rp.pose.p == rs.pose.p);
    CHECK(rp.pose.q.coeffs() == rs.pose.q.coeffs());
    CHECK(rp.residuals == rs.residuals);
  }
}
