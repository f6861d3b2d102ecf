#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include "roll/error.hpp"
#include "roll/eval.hpp"
#include "roll/pipeline.hpp"

namespace fs = std::filesystem;
using namespace roll;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitAbort = 3;

SessionConfig make_config(const std::string& file, const std::vector<std::string>& sets) {
  SessionConfig cfg;
  if (!file.empty()) cfg = load_config(file, cfg);
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ConfigError, "--set expects key=value, got '" + kv + "'");
    }
    apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  validate(cfg);
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

int cmd_simulate(const std::string& scenario, const std::string& out, int session) {
  const Scenario sc = load_preset(scenario);
  fs::create_directories(out);
  std::string cfg_text = "# scenario " + sc.name + "\n";
  for (const auto& [k, v] : sc.config) cfg_text += k + " = " + v + "\n";
  write_text(fs::path(out) / "config.toml", cfg_text);
  for (std::size_t s = 0; s < sc.sessions.size(); ++s) {
    if (session >= 0 && static_cast<std::size_t>(session) != s) continue;
    const SessionData data = generate_session(sc, s);
    const fs::path dir = fs::path(out) / ("session" + std::to_string(s));
    write_session(dir, sc, data);
    std::printf("%s: %zu scans -> %s\n", sc.sessions[s].name.c_str(), data.truth.size(),
                dir.string().c_str());
  }
  return kExitOk;
}

int cmd_build_map(const std::string& session, const std::string& out, const SessionConfig& cfg) {
  const DirScanSource scans(session);
  const Trajectory truth = read_trajectory_csv(fs::path(session) / "truth.csv");
  const GlobalMap map = build_map(scans, truth, cfg);
  save_map(map, out);
  std::printf("built %zu keyframes from %zu scans -> %s\n", map.size(), scans.size(), out.c_str());
  return kExitOk;
}

int cmd_localize(const std::string& map_path, const std::string& session, const std::string& out,
                 const std::string& save_to, SessionConfig cfg) {
  if (!map_path.empty()) cfg.map_path = map_path;
  if (cfg.map_path.empty()) throw Error(ErrorCode::ConfigError, "no map given");
  const DirScanSource scans(session);
  const Trajectory odom = read_trajectory_csv(fs::path(session) / "odom.csv");
  if (!cfg.initial_pose) {
    const fs::path truth = fs::path(session) / "truth.csv";
    if (!fs::exists(truth)) {
      throw Error(ErrorCode::ConfigError, "initial_pose not set and no truth.csv to take it from");
    }
    cfg.initial_pose = read_trajectory_csv(truth).front().pose;
  }
  const GlobalMap map = load_map(cfg.map_path);
  const auto t0 = std::chrono::steady_clock::now();
  SessionReport rep = run_session(map, scans, odom, cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  fs::create_directories(out);
  write_trajectory_csv(fs::path(out) / "fused.csv", rep.fused, "fused");
  write_trajectory_csv(fs::path(out) / "direct.csv", rep.direct, "direct");
  write_text(fs::path(out) / "events.jsonl", format_events(rep.events));
  if (!save_to.empty()) save_map(rep.map, save_to);
  for (const auto& w : rep.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  std::printf("scans %zu  time %.2f s  rate %.1f Hz  TM %zu  merges %zu  keyframes %zu\n",
              rep.scans.size(), secs, rep.scans.size() / std::max(secs, 1e-9), rep.tm_count,
              rep.merges.size(), rep.map.size());
  if (rep.aborted) {
    std::fprintf(stderr, "localization aborted: %s\n", rep.abort_reason.c_str());
    return kExitAbort;
  }
  return kExitOk;
}

std::vector<double> parse_thresholds(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, "bad threshold '" + item + "'");
    }
  }
  return out;
}

int cmd_eval(const std::vector<std::string>& est, const std::string& truth,
             const std::string& thresholds, double window) {
  const Trajectory gt = read_trajectory_csv(truth);
  const auto taus = parse_thresholds(thresholds);
  std::vector<std::pair<std::string, ErrorSummary>> rows;
  for (const auto& e : est) {
    const ErrorSeries errs = associate_trajectories(read_trajectory_csv(e), gt, window);
    rows.emplace_back(fs::path(e).stem().string(), summarize(errs, taus));
    if (errs.unmatched > 0) {
      std::fprintf(stderr, "%s: %zu poses without truth within %.3f s\n", e.c_str(),
                   errs.unmatched, window);
    }
  }
  std::fputs(format_summary_table(rows).c_str(), stdout);
  return kExitOk;
}

int cmd_map_info(const std::string& path) {
  const GlobalMap map = load_map(path);
  std::printf("file       %s\n", path.c_str());
  std::printf("bytes      %ju\n", static_cast<std::uintmax_t>(fs::file_size(path)));
  std::printf("keyframes  %zu\n", map.size());
  if (map.empty()) return kExitOk;
  Vec3 lo = Vec3::Constant(1e300), hi = Vec3::Constant(-1e300);
  std::size_t edges = 0, surfs = 0;
  std::map<std::string, std::size_t> prov;
  std::map<double, std::size_t> leaves;
  for (const auto& [id, kf] : map.keyframes()) {
    lo = lo.cwiseMin(kf.obs_pose.p);
    hi = hi.cwiseMax(kf.obs_pose.p);
    edges += kf.features.edges.size();
    surfs += kf.features.surfaces.size();
    ++prov[kf.provenance.kind == Provenance::Kind::Initial
               ? std::string("initial")
               : "merged(session " + std::to_string(kf.provenance.session) + ")"];
    ++leaves[kf.leaf];
  }
  std::printf("extent     [%.2f, %.2f, %.2f] .. [%.2f, %.2f, %.2f]\n", lo.x(), lo.y(), lo.z(),
              hi.x(), hi.y(), hi.z());
  std::printf("points     %zu edge, %zu surface\n", edges, surfs);
  for (const auto& [k, n] : prov) std::printf("provenance %-20s %zu\n", k.c_str(), n);
  for (const auto& [l, n] : leaves) std::printf("leaf       %-20.3f %zu\n", l, n);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"roll: lidar localization against a pre-built keyframe map"};
  app.require_subcommand(1);

  std::string config_file;
  std::vector<std::string> sets;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_file, "TOML-like key = value file");
    sub->add_option("--set", sets, "override one key, key=value")->take_all();
  };

  std::string scenario, out_dir;
  int session_index = -1;
  auto* sim = app.add_subcommand("simulate", "generate sessions of a scenario preset");
  sim->add_option("--scenario", scenario, "preset name or JSON path")->required();
  sim->add_option("--out", out_dir, "output directory")->required();
  sim->add_option("--session", session_index, "only this session index");

  std::string session_dir, map_out;
  auto* bm = app.add_subcommand("build-map", "build a global map from truth poses");
  bm->add_option("--session", session_dir, "session directory")->required();
  bm->add_option("--out", map_out, "map file")->required();
  add_config(bm);

  std::string map_in, save_map_to;
  auto* loc = app.add_subcommand("localize", "localize a session against a map");
  loc->add_option("--map", map_in, "map file");
  loc->add_option("--session", session_dir, "session directory")->required();
  loc->add_option("--out", out_dir, "output directory")->required();
  loc->add_option("--save-map", save_map_to, "write the updated map here");
  add_config(loc);

  std::vector<std::string> est;
  std::string truth, thresholds = "0.1,0.2,0.5";
  double window = 0.05;
  auto* ev = app.add_subcommand("eval", "evaluate trajectories against ground truth");
  ev->add_option("--est", est, "estimated trajectory CSV (repeatable)")->required();
  ev->add_option("--truth", truth, "ground-truth CSV")->required();
  ev->add_option("--thresholds", thresholds, "comma-separated error thresholds in metres");
  ev->add_option("--window", window, "association window in seconds");

  std::string info_path;
  auto* mi = app.add_subcommand("map-info", "summarize a map file");
  mi->add_option("file", info_path, "map file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (sim->parsed()) return cmd_simulate(scenario, out_dir, session_index);
    if (bm->parsed()) return cmd_build_map(session_dir, map_out, make_config(config_file, sets));
    if (loc->parsed()) {
      return cmd_localize(map_in, session_dir, out_dir, save_map_to, make_config(config_file, sets));
    }
    if (ev->parsed()) return cmd_eval(est, truth, thresholds, window);
    if (mi->parsed()) return cmd_map_info(info_path);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    if (e.code() == ErrorCode::ConfigError) return kExitConfig;
    if (e.code() == ErrorCode::LocalizationAbort) return kExitAbort;
    return kExitFailure;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}
