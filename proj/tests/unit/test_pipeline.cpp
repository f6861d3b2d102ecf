#include <filesystem>

#include "roll/error.hpp"
#include "roll/eval.hpp"
#include "roll/pipeline.hpp"
#include "util.hpp"

using namespace roll;

namespace {

// Small walled yard with a short loop; sessions share the world.
const char* kYard = R"({
  "name": "yard",
  "sensor": {"rings": 16, "elev_min": -15, "elev_max": 15, "azimuth_steps": 900, "max_range": 60},
  "world": [
    {"type": "plane", "point": [0, 0, 0], "normal": [0, 0, 1], "tag": "ground"},
    {"type": "box", "center": [0, 14, 3], "yaw": 0, "size": [30, 0.5, 6], "tag": "wall"},
    {"type": "box", "center": [0, -14, 3], "yaw": 0, "size": [30, 0.5, 6], "tag": "wall"},
    {"type": "box", "center": [14, 0, 3], "yaw": 0, "size": [0.5, 30, 6], "tag": "wall"},
    {"type": "box", "center": [-14, 0, 3], "yaw": 0, "size": [0.5, 30, 6], "tag": "wall"},
    {"type": "box", "center": [7, 6, 1.5], "yaw": 0.4, "size": [2, 3, 3], "tag": "crate"},
    {"type": "box", "center": [-8, -5, 1.5], "yaw": -0.3, "size": [3, 2, 3], "tag": "crate"},
    {"type": "box", "center": [-6, 8, 2], "yaw": 0.9, "size": [1.5, 1.5, 4], "tag": "crate"},
    {"type": "cylinder", "center": [3, -8, 2.5], "radius": 0.25, "height": 5, "tag": "pole"},
    {"type": "cylinder", "center": [-10, 2, 2.5], "radius": 0.25, "height": 5, "tag": "pole"}
  ],
  "sessions": [
    {"name": "map", "trajectory": {"origin": [0, -3, 1.8, 0], "preset": "loop", "size": 3.0}, "seed": 1},
    {"name": "again", "trajectory": {"origin": [0, -3, 1.8, 0], "preset": "loop", "size": 3.0, "t0": 1000}, "seed": 2}
  ]
})";

Scenario yard() { return parse_scenario(kYard); }

}  // namespace

TEST_SUITE("examples") {
  TEST_CASE("build_map: one scan gives one keyframe") {
    const Scenario sc = yard();
    SessionData d = generate_session(sc, 0);
    d.truth.resize(1);
    d.odom.resize(1);
    const GlobalMap map = build_map(*make_source(sc, d), d.truth, scenario_config(sc));
    REQUIRE(map.size() == 1);
    CHECK(map.keyframes().begin()->second.obs_pose.p == d.truth.front().pose.p);
  }

  TEST_CASE("build_map is byte-deterministic") {
    const Scenario sc = yard();
    const SessionData d = generate_session(sc, 0);
    const SessionConfig cfg = scenario_config(sc);
    const GlobalMap a = build_map(*make_source(sc, d), d.truth, cfg);
    const GlobalMap b = build_map(*make_source(sc, d), d.truth, cfg);
    CHECK(a.size() > 5);
    CHECK(serialize_map(a) == serialize_map(b));
  }

  TEST_CASE("unchanged world and zero-drift odometry: full success, no TM") {
    const Scenario sc = yard();
    const SessionData m = generate_session(sc, 0);
    SessionConfig cfg = scenario_config(sc);
    const GlobalMap map = build_map(*make_source(sc, m), m.truth, cfg);
    const SessionData s = generate_session(sc, 1);
    cfg.initial_pose = s.truth.front().pose;
    const SessionReport r = run_session(map, *make_source(sc, s), s.odom, cfg);
    CHECK_FALSE(r.aborted);
    CHECK(r.tm_count == 0);
    REQUIRE(r.fused.size() == s.truth.size());
    REQUIRE(r.direct.size() == s.truth.size());
    const ErrorSummary sum = summarize(associate_trajectories(r.fused, s.truth), {0.1});
    CHECK(sum.success_ratio == 1.0);
  }

  TEST_CASE("a bad initial pose aborts localization") {
    const Scenario sc = yard();
    const SessionData m = generate_session(sc, 0);
    SessionConfig cfg = scenario_config(sc);
    const GlobalMap map = build_map(*make_source(sc, m), m.truth, cfg);
    cfg.initial_pose = Pose::translation(500, 0, 0);
    try {
      run_session(map, *make_source(sc, m), m.odom, cfg);
      FAIL("expected LocalizationAbort");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::LocalizationAbort);
    }
  }
}

TEST_SUITE("scenarios") {
  TEST_CASE("corridor keyframes carry the confined leaf") {
    const Scenario sc = load_preset("corridor");
    const SessionData d = generate_session(sc, 0);
    const SessionConfig cfg = scenario_config(sc);
    const GlobalMap map = build_map(*make_source(sc, d), d.truth, cfg);
    REQUIRE_FALSE(map.empty());
    std::size_t confined = 0;
    for (const auto& [id, kf] : map.keyframes()) {
      if (kf.features.confined) {
        CHECK(kf.leaf == doctest::Approx(cfg.confined_leaf));
        ++confined;
      }
    }
    CHECK(confined * 2 > map.size());
  }

  TEST_CASE("parking-change: TM inside the changed region, frozen drift, sound merge") {
    const Scenario sc = load_preset("parking-change");
    REQUIRE(sc.region.has_value());
    const SessionData m = generate_session(sc, 0);
    SessionConfig cfg = scenario_config(sc);
    const GlobalMap map = build_map(*make_source(sc, m), m.truth, cfg);
    const SessionData s = generate_session(sc, 1);
    cfg.initial_pose = s.truth.front().pose;
    const SessionReport r = run_session(map, *make_source(sc, s), s.odom, cfg);
    REQUIRE(r.tm_count >= 1);
    for (const auto& e : r.events) {
      if (e.kind == "EnterTM") {
        const std::size_t k = e.index;
        CAPTURE(k);
        CHECK(sc.region->contains(s.truth[k].pose.p));
      }
    }

    // direct poses during TM are the frozen drift composed with odometry
    const auto& odom = s.odom;
    for (std::size_t k = 1; k < r.scans.size(); ++k) {
      if (r.scans[k].mode != Mode::TemporaryMapping || r.scans[k - 1].mode != Mode::TemporaryMapping) continue;
      const Pose d0 = r.direct[k - 1].pose * inverse(odom[k - 1].pose);
      const Pose expect = d0 * odom[k].pose;
      REQUIRE((r.direct[k].pose.p - expect.p).norm() < 1e-9);
    }

    const auto path = std::filesystem::temp_directory_path() / "roll_unit_merged.rlmp";
    save_map(r.map, path);
    CHECK(load_map(path) == r.map);
    std::filesystem::remove(path);
    for (const auto& mr : r.merges) {
      for (auto id : mr.added_ids) CHECK(r.map.at(id).provenance.kind == Provenance::Kind::Merged);
    }
  }
}
