#include "roll/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include "roll/error.hpp"
#include "roll/scan_io.hpp"

namespace roll {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const char* what) {
  throw Error(ErrorCode::ConfigError, key + " = '" + value + "': " + what);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) bad(key, v, "not a number");
    return d;
  } catch (const std::logic_error&) {
    bad(key, v, "not a number");
  }
}

long to_long(const std::string& key, const std::string& v) {
  long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad(key, v, "not an integer");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad(key, v, "not a boolean");
}

std::vector<double> to_list(const std::string& key, std::string v) {
  if (!v.empty() && v.front() == '[') v.erase(0, 1);
  if (!v.empty() && v.back() == ']') v.pop_back();
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
  return out;
}

Vec6 to_vec6(const std::string& key, const std::string& v) {
  const auto l = to_list(key, v);
  if (l.size() != 6) bad(key, v, "expected 6 values");
  Vec6 out;
  for (int i = 0; i < 6; ++i) out[i] = l[static_cast<std::size_t>(i)];
  return out;
}

std::string unquote(const std::string& v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  return v;
}

std::string fmt(double d) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

std::string fmt6(const Vec6& v) {
  std::string s = "[";
  for (int i = 0; i < 6; ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s + "]";
}

struct Field {
  std::function<void(SessionConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const SessionConfig&)> get;
};

#define ROLL_DOUBLE(name, member)                                                              \
  {name,                                                                                       \
   {[](SessionConfig& c, const std::string& k, const std::string& v) { c.member = to_double(k, v); }, \
    [](const SessionConfig& c) { return fmt(c.member); }}}
#define ROLL_INT(name, member, type)                                                           \
  {name,                                                                                       \
   {[](SessionConfig& c, const std::string& k, const std::string& v) {                        \
      c.member = static_cast<type>(to_long(k, v));                                             \
    },                                                                                         \
    [](const SessionConfig& c) { return std::to_string(c.member); }}}
#define ROLL_BOOL(name, member)                                                                \
  {name,                                                                                       \
   {[](SessionConfig& c, const std::string& k, const std::string& v) { c.member = to_bool(k, v); }, \
    [](const SessionConfig& c) { return std::string(c.member ? "true" : "false"); }}}
#define ROLL_VEC6(name, member)                                                                \
  {name,                                                                                       \
   {[](SessionConfig& c, const std::string& k, const std::string& v) { c.member = to_vec6(k, v); }, \
    [](const SessionConfig& c) { return fmt6(c.member); }}}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> f = {
      ROLL_DOUBLE("edge_threshold", features.edge_threshold),
      ROLL_DOUBLE("surf_threshold", features.surf_threshold),
      ROLL_INT("sectors", features.sectors, int),
      ROLL_INT("edges_per_sector", features.edges_per_sector, int),
      ROLL_INT("surfs_per_sector", features.surfs_per_sector, int),
      ROLL_INT("half_window", features.half_window, int),
      ROLL_DOUBLE("range_gap", features.range_gap),
      ROLL_DOUBLE("d_c", d_c),
      ROLL_DOUBLE("r_c", r_c),
      ROLL_DOUBLE("open_leaf", open_leaf),
      ROLL_DOUBLE("confined_leaf", confined_leaf),
      ROLL_DOUBLE("cull_trans", cull_trans),
      ROLL_DOUBLE("cull_rot", cull_rot),
      ROLL_DOUBLE("local_radius", local_radius),
      ROLL_DOUBLE("replace_radius", replace_radius),
      ROLL_DOUBLE("d_t", match.d_t),
      ROLL_INT("max_iters", match.max_iters, int),
      ROLL_DOUBLE("max_corr_dist", match.gate.max_corr_dist),
      ROLL_DOUBLE("plane_min_sine", match.gate.plane_min_sine),
      ROLL_INT("check_neighbors", match.gate.check_neighbors, int),
      ROLL_DOUBLE("line_check_tol", match.gate.line_check_tol),
      ROLL_DOUBLE("plane_check_tol", match.gate.plane_check_tol),
      ROLL_BOOL("compact_neighbors", match.gate.compact),
      ROLL_DOUBLE("max_residual", match.gate.max_residual),
      ROLL_INT("min_correspondences", match.min_correspondences, std::size_t),
      ROLL_DOUBLE("degeneracy_eig", match.degeneracy_eig),
      ROLL_BOOL("tm_enabled", tm_enabled),
      ROLL_DOUBLE("mu_E", mu_E),
      ROLL_DOUBLE("mu_M", mu_M),
      ROLL_INT("window_cap", window_cap, std::size_t),
      ROLL_VEC6("tm_odom_cov", tm_cov.odom),
      ROLL_VEC6("tm_gm_cov", tm_cov.gm),
      ROLL_BOOL("fusion_enabled", fusion_enabled),
      ROLL_INT("n_t", fusion.n_t, std::size_t),
      ROLL_DOUBLE("p_t", fusion.p_t),
      ROLL_BOOL("consistency_check", fusion.consistency_check),
      ROLL_VEC6("fusion_odom_cov", fusion.cov.odom),
      ROLL_VEC6("fusion_gm_cov", fusion.cov.gm),
      ROLL_BOOL("deterministic", deterministic),
      ROLL_INT("session_id", session_id, std::uint32_t),
      ROLL_DOUBLE("inject.gm_noise", inject.gm_noise),
      ROLL_INT("inject.gm_noise_seed", inject.gm_noise_seed, std::uint64_t),
      ROLL_INT("inject.burst_start", inject.burst_start, long),
      ROLL_INT("inject.burst_length", inject.burst_length, long),
      ROLL_DOUBLE("inject.burst_offset", inject.burst_offset),
      {"map", {[](SessionConfig& c, const std::string&, const std::string& v) { c.map_path = unquote(v); },
               [](const SessionConfig& c) { return "\"" + c.map_path + "\""; }}},
      {"initial_pose",
       {[](SessionConfig& c, const std::string& k, const std::string& v) {
          const auto l = to_list(k, v);
          if (l.empty()) {
            c.initial_pose.reset();
            return;
          }
          if (l.size() != 7) bad(k, v, "expected px,py,pz,qx,qy,qz,qw");
          const Quat q(l[6], l[3], l[4], l[5]);
          if (!(q.norm() > 1e-9)) bad(k, v, "zero quaternion");
          c.initial_pose = Pose(Vec3(l[0], l[1], l[2]), q);
        },
        [](const SessionConfig& c) {
          if (!c.initial_pose) return std::string("[]");
          const auto& p = *c.initial_pose;
          return "[" + fmt(p.p.x()) + ", " + fmt(p.p.y()) + ", " + fmt(p.p.z()) + ", " +
                 fmt(p.q.x()) + ", " + fmt(p.q.y()) + ", " + fmt(p.q.z()) + ", " + fmt(p.q.w()) + "]";
        }}},
  };
  return f;
}

#undef ROLL_DOUBLE
#undef ROLL_INT
#undef ROLL_BOOL
#undef ROLL_VEC6

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::ConfigError, what);
}

}  // namespace

void apply_setting(SessionConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = fields().find(trim(key));
  if (it == fields().end()) {
    throw Error(ErrorCode::ConfigError, "unknown key '" + trim(key) + "'");
  }
  it->second.set(cfg, it->first, trim(value));
}

void apply_config_text(SessionConfig& cfg, const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": expected key = value");
    }
    try {
      apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

SessionConfig load_config(const std::filesystem::path& path, SessionConfig base) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  apply_config_text(base, std::string(bytes.begin(), bytes.end()));
  return base;
}

void validate(const SessionConfig& c) {
  const auto& f = c.features;
  require(f.edge_threshold > f.surf_threshold && f.surf_threshold > 0.0,
          "need edge_threshold > surf_threshold > 0");
  require(f.sectors >= 1 && f.half_window >= 1, "sectors and half_window must be positive");
  require(f.range_gap > 0.0, "range_gap must be positive");
  require(c.d_c > 0.0 && c.r_c >= 0.0 && c.r_c <= 1.0, "need d_c > 0 and r_c in [0, 1]");
  require(c.confined_leaf > 0.0 && c.confined_leaf < c.open_leaf,
          "need 0 < confined_leaf < open_leaf");
  require(c.cull_trans > 0.0 && c.cull_rot > 0.0, "culling thresholds must be positive");
  require(c.local_radius > 0.0 && c.replace_radius > 0.0, "radii must be positive");
  require(c.match.d_t > 0.0 && c.match.max_iters >= 1 && c.match.gate.max_corr_dist > 0.0 &&
              c.match.degeneracy_eig >= 0.0,
          "need d_t > 0, max_iters >= 1, max_corr_dist > 0, degeneracy_eig >= 0");
  require(c.match.gate.max_residual >= 0.0, "max_residual must be >= 0");
  require(c.match.gate.plane_min_sine >= 0.0 && c.match.gate.plane_min_sine < 1.0,
          "plane_min_sine must be in [0, 1)");
  require(c.match.gate.check_neighbors >= 0 && c.match.gate.check_neighbors <= 5 &&
              c.match.gate.line_check_tol > 0.0 && c.match.gate.plane_check_tol > 0.0,
          "need 0 <= check_neighbors <= 5 and positive check tolerances");
  require(c.mu_E >= 0.0 && c.mu_M <= 1.0 && c.mu_M > c.mu_E, "need 0 <= mu_E < mu_M <= 1");
  require(c.window_cap >= 1, "window_cap must be at least 1");
  require((c.tm_cov.odom.array() > 0.0).all() && (c.tm_cov.gm.array() > 0.0).all() &&
              (c.fusion.cov.odom.array() > 0.0).all() && (c.fusion.cov.gm.array() > 0.0).all(),
          "covariances must be positive");
  require(c.fusion.n_t >= 2 && c.fusion.p_t > 0.0, "need n_t >= 2 and p_t > 0");
  require(c.session_id >= 1, "session_id starts at 1");
  require(c.inject.gm_noise >= 0.0 && c.inject.burst_length >= 0, "invalid injection settings");
}

std::string dump_config(const SessionConfig& cfg) {
  std::string out;
  for (const auto& [k, f] : fields()) out += k + " = " + f.get(cfg) + "\n";
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, f] : fields()) keys.push_back(k);
  return keys;
}

}  // namespace roll
