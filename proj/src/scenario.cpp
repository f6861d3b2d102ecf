#include "roll/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <nlohmann/json.hpp>

#include "roll/error.hpp"

namespace roll {

namespace {

using nlohmann::json;

constexpr double kDeg = 3.14159265358979323846 / 180.0;

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

Vec3 vec3(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array() || j[key].size() != 3) {
    bad(std::string("expected 3-vector '") + key + "'");
  }
  return {j[key][0].get<double>(), j[key][1].get<double>(), j[key][2].get<double>()};
}

Vec6 vec6(const json& j, const char* key) {
  Vec6 v = Vec6::Zero();
  if (!j.contains(key)) return v;
  if (!j[key].is_array() || j[key].size() != 6) bad(std::string("expected 6-vector '") + key + "'");
  for (int i = 0; i < 6; ++i) v[i] = j[key][static_cast<std::size_t>(i)].get<double>();
  return v;
}

Pose planar_pose(const json& a) {
  if (!a.is_array() || a.size() != 4) bad("expected [x, y, z, yaw_deg]");
  return {Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>()),
          Quat(Eigen::AngleAxisd(a[3].get<double>() * kDeg, Vec3::UnitZ()))};
}

Primitive parse_primitive(const json& j) {
  const std::string type = j.value("type", "");
  const std::string tag = j.value("tag", type);
  if (type == "plane") {
    double ex = 0.0, ey = 0.0;
    if (j.contains("extent")) {
      ex = j["extent"].at(0).get<double>();
      ey = j["extent"].at(1).get<double>();
    }
    return Primitive::plane(vec3(j, "point"), vec3(j, "normal"), ex, ey, tag);
  }
  if (type == "box") {
    return Primitive::box(vec3(j, "center"), j.value("yaw", 0.0) * kDeg, vec3(j, "size"), tag);
  }
  if (type == "cylinder") {
    return Primitive::cylinder(vec3(j, "center"), j.at("radius").get<double>(),
                               j.at("height").get<double>(), tag);
  }
  bad("unknown primitive type '" + type + "'");
}

json primitive_json(const Primitive& p) {
  json j;
  j["id"] = p.id;
  j["tag"] = p.tag;
  const auto c = p.pose.p;
  switch (p.kind) {
    case Primitive::Kind::Plane: {
      const Vec3 n = p.pose.rotation().col(2);
      j["type"] = "plane";
      j["point"] = {c.x(), c.y(), c.z()};
      j["normal"] = {n.x(), n.y(), n.z()};
      if (p.bounded()) j["extent"] = {p.dims.x(), p.dims.y()};
      break;
    }
    case Primitive::Kind::Box: {
      const Mat3 R = p.pose.rotation();
      j["type"] = "box";
      j["center"] = {c.x(), c.y(), c.z()};
      j["yaw"] = std::atan2(R(1, 0), R(0, 0)) / kDeg;
      j["size"] = {p.dims.x(), p.dims.y(), p.dims.z()};
      break;
    }
    case Primitive::Kind::Cylinder:
      j["type"] = "cylinder";
      j["center"] = {c.x(), c.y(), c.z()};
      j["radius"] = p.dims.x();
      j["height"] = p.dims.z();
      break;
  }
  return j;
}

TrajectoryParams parse_trajectory(const json& j) {
  TrajectoryParams p;
  const Pose origin = j.contains("origin") ? planar_pose(j["origin"]) : Pose();
  const double speed = j.value("speed", 1.0);
  const double rate = j.value("rate", 10.0);
  if (j.contains("preset")) {
    const std::string kind = j["preset"].get<std::string>();
    const double size = j.at("size").get<double>();
    TrajectoryKind k;
    if (kind == "loop") k = TrajectoryKind::Loop;
    else if (kind == "corridor") k = TrajectoryKind::Corridor;
    else if (kind == "figure8") k = TrajectoryKind::Figure8;
    else bad("unknown trajectory preset '" + kind + "'");
    p = trajectory_preset(k, size, origin, speed, rate);
  } else {
    p.origin = origin;
    p.speed = speed;
    p.rate = rate;
    for (const auto& s : j.at("segments")) {
      p.segments.push_back({s.at(0).get<double>(), s.at(1).get<double>() * kDeg});
    }
  }
  p.t0 = j.value("t0", 0.0);
  return p;
}

std::vector<SceneChange> parse_changes(const json& arr, const World& base) {
  std::vector<SceneChange> out;
  for (const auto& c : arr) {
    if (c.contains("remove")) {
      out.push_back(SceneChange::remove(c["remove"].get<std::string>()));
    } else if (c.contains("add")) {
      out.push_back(SceneChange::add(parse_primitive(c["add"])));
    } else if (c.contains("move")) {
      out.push_back(SceneChange::move(c["move"].get<std::uint32_t>(), planar_pose(c.at("delta"))));
    } else if (c.contains("move_tag")) {
      const std::string tag = c["move_tag"].get<std::string>();
      const Pose delta = planar_pose(c.at("delta"));
      bool any = false;
      for (const auto& p : base.primitives()) {
        if (p.tag == tag) {
          out.push_back(SceneChange::move(p.id, delta));
          any = true;
        }
      }
      if (!any) bad("move_tag: no primitive tagged '" + tag + "'");
    } else {
      bad("unknown scene change");
    }
  }
  return out;
}

std::string config_value(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_array()) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ",") + config_value(x);
    return s;
  }
  return v.dump();
}

}  // namespace

SimScanSource::SimScanSource(World world, SensorModel sensor, Trajectory truth, std::uint64_t seed)
    : world_(std::move(world)), sensor_(std::move(sensor)), truth_(std::move(truth)), seed_(seed) {}

Scan SimScanSource::get(std::size_t k) const {
  Scan s = raycast_scan(world_, sensor_, truth_.at(k).pose, seed_ + 7919ULL * k);
  s.cloud = quantize_cloud(s.cloud);
  s.cloud.timestamp = truth_[k].t;
  return s;
}

std::filesystem::path scan_path(const std::filesystem::path& session_dir, std::size_t k) {
  char name[32];
  std::snprintf(name, sizeof name, "%06zu.rlsc", k);
  return session_dir / "scans" / name;
}

DirScanSource::DirScanSource(const std::filesystem::path& dir)
    : dir_(dir), rings_(read_rings_csv(dir / "rings.csv")) {}

Scan DirScanSource::get(std::size_t k) const {
  Scan s;
  s.cloud = read_scan(scan_path(dir_, k));
  s.rings = rings_.at(k);
  return s;
}

bool Region::contains(const Vec3& p) const {
  return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
}

Scenario parse_scenario(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    bad(std::string("scenario JSON: ") + e.what());
  }
  Scenario sc;
  try {
    sc.name = j.value("name", "unnamed");
    if (j.contains("sensor")) {
      const auto& s = j["sensor"];
      const int rings = s.value("rings", 16);
      const double lo = s.value("elev_min", -15.0);
      const double hi = s.value("elev_max", 15.0);
      sc.sensor.elevations_deg.clear();
      for (int i = 0; i < rings; ++i) {
        sc.sensor.elevations_deg.push_back(rings == 1 ? lo : lo + (hi - lo) * i / (rings - 1));
      }
      sc.sensor.azimuth_steps = s.value("azimuth_steps", 900);
      sc.sensor.max_range = s.value("max_range", 80.0);
      sc.sensor.range_noise = s.value("range_noise", 0.0);
      sc.sensor.min_range = s.value("min_range", 0.3);
    }
    for (const auto& p : j.at("world")) sc.world.add(parse_primitive(p));
    for (const auto& s : j.at("sessions")) {
      SessionSpec spec;
      spec.name = s.value("name", "session" + std::to_string(sc.sessions.size()));
      spec.trajectory = parse_trajectory(s.at("trajectory"));
      if (s.contains("changes")) spec.changes = parse_changes(s["changes"], sc.world);
      if (s.contains("odom")) {
        spec.odom.drift_per_meter = vec6(s["odom"], "drift");
        spec.odom.noise_sigma = vec6(s["odom"], "noise");
        spec.odom.seed = s["odom"].value("seed", 0ULL);
      }
      spec.scan_seed = s.value("seed", 0ULL);
      sc.sessions.push_back(std::move(spec));
    }
    if (j.contains("config")) {
      for (const auto& [k, v] : j["config"].items()) sc.config.emplace_back(k, config_value(v));
    }
    if (j.contains("region")) {
      sc.region = Region{vec3(j["region"], "min"), vec3(j["region"], "max")};
    }
  } catch (const json::exception& e) {
    bad(std::string("scenario ") + sc.name + ": " + e.what());
  }
  sc.sensor.validate();
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file(path);
  } catch (const Error& e) {
    bad(e.what());
  }
  return parse_scenario(std::string(bytes.begin(), bytes.end()));
}

std::filesystem::path preset_dir() {
  if (const char* env = std::getenv("ROLL_SCENARIO_DIR")) return env;
#ifdef ROLL_SCENARIO_DIR
  return ROLL_SCENARIO_DIR;
#else
  return "scenarios";
#endif
}

Scenario load_preset(const std::string& name) {
  const std::filesystem::path direct(name);
  if (direct.extension() == ".json" && std::filesystem::exists(direct)) return load_scenario(direct);
  const auto path = preset_dir() / (name + ".json");
  if (!std::filesystem::exists(path)) bad("unknown scenario '" + name + "'");
  return load_scenario(path);
}

World session_world(const Scenario& sc, std::size_t session) {
  World w = sc.world;
  for (const auto& c : sc.sessions.at(session).changes) w = apply_scene_change(w, c);
  return w;
}

SessionData generate_session(const Scenario& sc, std::size_t session) {
  if (session >= sc.sessions.size()) bad("scenario has no session " + std::to_string(session));
  const SessionSpec& spec = sc.sessions[session];
  SessionData d;
  d.world = session_world(sc, session);
  d.truth = make_trajectory(spec.trajectory);
  d.odom = drift_odometry(d.truth, spec.odom);
  d.scan_seed = spec.scan_seed;
  return d;
}

std::unique_ptr<ScanSource> make_source(const Scenario& sc, const SessionData& data) {
  return std::make_unique<SimScanSource>(data.world, sc.sensor, data.truth, data.scan_seed);
}

void write_session(const std::filesystem::path& dir, const Scenario& sc, const SessionData& data) {
  std::filesystem::create_directories(dir / "scans");
  const auto src = make_source(sc, data);
  std::vector<std::vector<std::uint32_t>> rings(src->size());
  for (std::size_t k = 0; k < src->size(); ++k) {
    Scan s = src->get(k);
    write_scan(scan_path(dir, k), s.cloud);
    rings[k] = std::move(s.rings);
  }
  write_rings_csv(dir / "rings.csv", rings);
  write_trajectory_csv(dir / "truth.csv", data.truth);
  write_trajectory_csv(dir / "odom.csv", data.odom);
  const std::string world = world_to_json(data.world);
  write_file(dir / "world.json",
             std::span(reinterpret_cast<const std::uint8_t*>(world.data()), world.size()));
}

std::string world_to_json(const World& world) {
  json arr = json::array();
  for (const auto& p : world.primitives()) arr.push_back(primitive_json(p));
  return arr.dump(1) + "\n";
}

}  // namespace roll
