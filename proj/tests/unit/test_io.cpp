#include <filesystem>

#include "roll/config.hpp"
#include "roll/error.hpp"
#include "roll/scan_io.hpp"
#include "roll/scenario.hpp"
#include "util.hpp"

using namespace roll;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("roll_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_SUITE("properties") {
  TEST_CASE("scan files round trip at float precision") {
    std::mt19937_64 rng(1);
    PointCloud c;
    c.timestamp = 12.5;
    for (int i = 0; i < 300; ++i) c.points.push_back(roll::test::random_vec(rng, 50.0));
    const fs::path dir = scratch_dir("scan");
    write_scan(dir / "a.rlsc", c);
    const PointCloud back = read_scan(dir / "a.rlsc");
    CHECK(back.timestamp == 12.5);
    CHECK(back.points == quantize_cloud(c).points);

    auto bytes = read_file(dir / "a.rlsc");
    bytes[0] = 'X';
    write_file(dir / "b.rlsc", bytes);
    try {
      read_scan(dir / "b.rlsc");
      FAIL("expected CorruptFile");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::CorruptFile);
    }
    bytes = read_file(dir / "a.rlsc");
    bytes.resize(bytes.size() - 5);
    write_file(dir / "c.rlsc", bytes);
    CHECK_THROWS_AS(read_scan(dir / "c.rlsc"), Error);
    fs::remove_all(dir);
  }

  TEST_CASE("trajectory and ring CSVs round trip") {
    std::mt19937_64 rng(2);
    Trajectory t;
    for (int i = 0; i < 50; ++i) t.push_back({0.1 * i, roll::test::random_pose(rng)});
    const fs::path dir = scratch_dir("csv");
    write_trajectory_csv(dir / "t.csv", t, "fused");
    const Trajectory back = read_trajectory_csv(dir / "t.csv");
    REQUIRE(back.size() == t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      CHECK(back[i].t == t[i].t);
      CHECK(back[i].pose.p == t[i].pose.p);
      CHECK(std::abs(back[i].pose.q.dot(t[i].pose.q)) == doctest::Approx(1.0));
    }
    CHECK(format_trajectory_csv(t, "fused") == format_trajectory_csv(back, "fused"));

    const std::vector<std::vector<std::uint32_t>> rings{{0, 10, 25}, {0, 3, 3, 9}};
    write_rings_csv(dir / "rings.csv", rings);
    CHECK(read_rings_csv(dir / "rings.csv") == rings);
    fs::remove_all(dir);
  }

  TEST_CASE("config parsing and validation") {
    SessionConfig cfg;
    apply_config_text(cfg, "# comment\n[matching]\nd_t = 0.8\nmu_E = 0.25\nconsistency_check = false\n");
    CHECK(cfg.match.d_t == 0.8);
    CHECK(cfg.mu_E == 0.25);
    CHECK_FALSE(cfg.fusion.consistency_check);
    CHECK_THROWS_AS(apply_setting(cfg, "no_such_key", "1"), Error);
    CHECK_THROWS_AS(apply_setting(cfg, "d_t", "abc"), Error);
    try {
      apply_config_text(cfg, "d_c = 5\nbogus line\n");
      FAIL("expected ConfigError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ConfigError);
      CHECK(std::string(e.what()).find('2') != std::string::npos);
    }

    SessionConfig bad;
    bad.mu_M = 0.2;
    CHECK_THROWS_AS(validate(bad), Error);
    SessionConfig leaf;
    leaf.confined_leaf = 0.5;
    CHECK_THROWS_AS(validate(leaf), Error);
    CHECK_NOTHROW(validate(SessionConfig{}));

    // defaults and the dump round trip
    const SessionConfig d;
    CHECK(d.d_c == 5.0);
    CHECK(d.r_c == 0.3);
    CHECK(d.mu_E == 0.3);
    CHECK(d.mu_M == 0.5);
    CHECK(d.fusion.p_t == 0.5);
    CHECK(d.fusion.n_t == 100);
    SessionConfig round;
    apply_config_text(round, dump_config(cfg));
    CHECK(dump_config(round) == dump_config(cfg));
    CHECK(config_keys().size() > 30);
  }

  TEST_CASE("scenario files and written sessions") {
    for (const char* name : {"campus-loop", "parking-change", "construction", "corridor"}) {
      CAPTURE(name);
      const Scenario sc = load_preset(name);
      CHECK(sc.sessions.size() >= 2);
      CHECK(sc.world.size() > 0);
    }
    CHECK_THROWS_AS(parse_scenario("{\"world\": 3}"), Error);
    CHECK_THROWS_AS(parse_scenario("not json"), Error);

    Scenario sc = load_preset("campus-loop");
    SessionData d = generate_session(sc, 0);
    d.truth.resize(3);
    d.odom.resize(3);
    const fs::path dir = scratch_dir("session");
    write_session(dir, sc, d);
    const DirScanSource disk(dir);
    const auto sim = make_source(sc, d);
    REQUIRE(disk.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
      const Scan a = disk.get(k), b = sim->get(k);
      CHECK(a.cloud.points == b.cloud.points);
      CHECK(a.rings == b.rings);
      CHECK(a.cloud.timestamp == b.cloud.timestamp);
    }
    CHECK(read_trajectory_csv(dir / "truth.csv").size() == 3);
    fs::remove_all(dir);
  }
}
