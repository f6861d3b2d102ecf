#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "roll/sim.hpp"

namespace roll {

/// Random-access stream of lidar scans with ring boundaries.
class ScanSource {
 public:
  virtual ~ScanSource() = default;
  virtual std::size_t size() const = 0;
  virtual Scan get(std::size_t k) const = 0;
};

/// Ray-casts on demand and rounds to the on-disk precision, so results match
/// a run over the files written by `write_session`.
class SimScanSource final : public ScanSource {
 public:
  SimScanSource(World world, SensorModel sensor, Trajectory truth, std::uint64_t seed);
  std::size_t size() const override { return truth_.size(); }
  Scan get(std::size_t k) const override;

 private:
  World world_;
  SensorModel sensor_;
  Trajectory truth_;
  std::uint64_t seed_;
};

/// Session directory: scans/NNNNNN.rlsc plus rings.csv.
class DirScanSource final : public ScanSource {
 public:
  explicit DirScanSource(const std::filesystem::path& dir);
  std::size_t size() const override { return rings_.size(); }
  Scan get(std::size_t k) const override;

 private:
  std::filesystem::path dir_;
  std::vector<std::vector<std::uint32_t>> rings_;
};

std::filesystem::path scan_path(const std::filesystem::path& session_dir, std::size_t k);

struct Region {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
  bool contains(const Vec3& p) const;
};

struct SessionSpec {
  std::string name;
  TrajectoryParams trajectory;
  std::vector<SceneChange> changes;  // applied to the base world
  OdomModel odom;
  std::uint64_t scan_seed = 0;
};

struct Scenario {
  std::string name;
  World world;
  SensorModel sensor = SensorModel::default16();
  std::vector<SessionSpec> sessions;
  std::vector<std::pair<std::string, std::string>> config;  // key/value overrides
  std::optional<Region> region;                              // changed or unmapped area
};

/// Throws ConfigError for a malformed description.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::filesystem::path& path);
/// Looks for <name>.json in the scenario directory (or ROLL_SCENARIO_DIR).
Scenario load_preset(const std::string& name);
std::filesystem::path preset_dir();

World session_world(const Scenario& sc, std::size_t session);

struct SessionData {
  World world;
  Trajectory truth;
  Trajectory odom;
  std::uint64_t scan_seed = 0;
};

SessionData generate_session(const Scenario& sc, std::size_t session);
std::unique_ptr<ScanSource> make_source(const Scenario& sc, const SessionData& data);

/// Writes scans, rings.csv, truth.csv and odom.csv into dir.
void write_session(const std::filesystem::path& dir, const Scenario& sc, const SessionData& data);

/// JSON list of primitives.
std::string world_to_json(const World& world);

}  // namespace roll
