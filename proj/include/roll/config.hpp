#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "roll/features.hpp"
#include "roll/fusion.hpp"
#include "roll/matching.hpp"
#include "roll/temporal.hpp"

namespace roll {

/// Fault injection applied to global-matching poses. Noise reaches both the
/// matching drift and fusion; the outlier burst reaches fusion only.
struct Injection {
  double gm_noise = 0.0;
  std::uint64_t gm_noise_seed = 0;
  long burst_start = -1;  // scan index, negative disables
  long burst_length = 10;
  double burst_offset = 5.0;  // metres along map x
};

struct SessionConfig {
  FeatureParams features;
  double d_c = 5.0;
  double r_c = 0.3;
  double open_leaf = 0.4;
  double confined_leaf = 0.2;

  double cull_trans = 1.0;
  double cull_rot = 0.2;
  double local_radius = 25.0;
  double replace_radius = 1.0;

  MatchOptions match;

  bool tm_enabled = true;
  double mu_E = 0.3;
  double mu_M = 0.5;
  std::size_t window_cap = 5;
  TemporalCovariances tm_cov;
  GraphOptions graph;

  bool fusion_enabled = true;
  FusionParams fusion;

  bool deterministic = true;
  std::optional<Pose> initial_pose;
  std::string map_path;
  std::uint32_t session_id = 1;

  Injection inject;
};

/// Sets one key from its textual value. Throws ConfigError for an unknown
/// key or a malformed value.
void apply_setting(SessionConfig& cfg, const std::string& key, const std::string& value);
/// Parses `key = value` lines; `#` starts a comment, `[section]` headers are
/// ignored. Throws ConfigError with the line number.
void apply_config_text(SessionConfig& cfg, const std::string& text);
SessionConfig load_config(const std::filesystem::path& path, SessionConfig base = {});
/// Throws ConfigError if any module precondition is violated.
void validate(const SessionConfig& cfg);
/// Every key with its current value, one `key = value` per line.
std::string dump_config(const SessionConfig& cfg);
std::vector<std::string> config_keys();

}  // namespace roll
