#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "roll/config.hpp"
#include "roll/keymap.hpp"
#include "roll/scenario.hpp"

namespace roll {

GlobalMap build_map(const ScanSource& scans, const Trajectory& truth, const SessionConfig& cfg);

struct SessionEvent {
  std::string kind;  // EnterTM, ExitTM, Merge, DiscardTM
  std::size_t index = 0;
  double t = 0.0;
  Pose pose;
  double mu = 0.0;
  std::size_t node_count = 0;
};

struct ScanRecord {
  double t = 0.0;
  double mu = 0.0;
  bool matched = false;   // optimize returned a result
  bool gm_used = false;   // result accepted as a reliable gm pose
  Mode mode = Mode::Normal;
  double ms = 0.0;        // wall time of the scan
};

struct SessionReport {
  Trajectory fused;
  Trajectory direct;
  Trajectory guesses;  // matching pose guesses (drift * odom predictions)
  std::vector<SessionEvent> events;
  std::vector<MergeReport> merges;
  std::vector<ScanRecord> scans;
  std::vector<std::string> warnings;
  GlobalMap map;
  std::size_t tm_count = 0;
  std::size_t fusion_rejects = 0;
  bool aborted = false;
  std::string abort_reason;
};

/// Runs localization over scans paired by index with odometry poses.
/// Throws LocalizationAbort when no keyframe is near the initial pose;
/// later numerical failures end the session early with `aborted` set.
SessionReport run_session(GlobalMap map, const ScanSource& scans, const Trajectory& odom,
                          const SessionConfig& cfg);

/// JSON lines {t, event, pose[7], mu, node_count}.
std::string format_events(const std::vector<SessionEvent>& events);

/// Scenario defaults with `ROLL_SCENARIO` overrides applied and validated.
SessionConfig scenario_config(const Scenario& sc, SessionConfig base = {});

}  // namespace roll
