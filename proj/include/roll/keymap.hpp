#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include "roll/cloud.hpp"
#include "roll/features.hpp"

namespace roll {

struct Provenance {
  enum class Kind : std::uint8_t { Initial, Merged };
  Kind kind = Kind::Initial;
  std::uint32_t session = 0;  // sessions are numbered from 1

  static Provenance initial() { return {}; }
  static Provenance merged(std::uint32_t session_id) { return {Kind::Merged, session_id}; }
  bool operator==(const Provenance&) const = default;
};

struct Keyframe {
  std::uint64_t id = 0;
  Pose obs_pose;          // map frame
  FeatureFrame features;  // lidar frame, float-representable coordinates
  double leaf = 0.0;      // voxel size the features were filtered with
  Provenance provenance;
};

/// Builds a keyframe from a feature frame: voxel-filters with `leaf` and rounds
/// coordinates to the on-disk precision so persistence is lossless.
Keyframe make_keyframe(std::uint64_t id, const Pose& obs_pose, const FeatureFrame& features,
                       double leaf, Provenance provenance = Provenance::initial());

/// Keyframes keyed by id plus a k-d tree over their observation positions.
/// Single writer; the pose index is rebuilt on every mutation.
class GlobalMap {
 public:
  const std::map<std::uint64_t, Keyframe>& keyframes() const { return keyframes_; }
  std::size_t size() const { return keyframes_.size(); }
  bool empty() const { return keyframes_.empty(); }
  const Keyframe& at(std::uint64_t id) const { return keyframes_.at(id); }

  /// Throws InvalidParameter on a duplicate id or empty features.
  void insert(Keyframe kf);
  void erase(std::uint64_t id);
  std::uint64_t next_id() const;
  /// Monotone counter bumped by every mutation; lets caches detect staleness.
  std::uint64_t version() const { return version_; }

  /// Ids of keyframes whose position lies within `radius` of `position`, ascending.
  std::vector<std::uint64_t> nearby(const Vec3& position, double radius) const;
  const SpatialIndex& pose_index() const { return pose_index_; }
  std::uint64_t index_id(std::uint32_t i) const { return index_ids_[i]; }

  bool operator==(const GlobalMap& other) const;

 private:
  void rebuild_index();

  std::map<std::uint64_t, Keyframe> keyframes_;
  SpatialIndex pose_index_;
  std::vector<std::uint64_t> index_ids_;
  std::uint64_t version_ = 0;
};

/// True iff translation >= trans_thresh or rotation angle >= rot_thresh.
bool should_cull(const Pose& last_pose, const Pose& cur_pose, double trans_thresh,
                 double rot_thresh);

struct LocalMap {
  PointCloud edge_map;  // P_k, map frame
  PointCloud surf_map;  // Q_k, map frame
  SpatialIndex edge_index;
  SpatialIndex surf_index;
  std::vector<std::uint64_t> source_ids;
  double leaf = 0.0;
  Vec3 center = Vec3::Zero();
};

/// Union of nearby keyframe features in the map frame, filtered at the leaf
/// of the keyframe closest to the guess. Throws NoNearbyKeyframes.
LocalMap build_local_map(const GlobalMap& map, const Pose& guess, double radius);

/// Reuses the last local map until the guess moves more than radius / 4 from
/// where it was built or the map changes.
class LocalMapCache {
 public:
  explicit LocalMapCache(double radius) : radius_(radius) {}
  const LocalMap& get(const GlobalMap& map, const Pose& guess);
  void invalidate() { built_ = false; }
  std::size_t rebuild_count() const { return rebuilds_; }

 private:
  double radius_;
  bool built_ = false;
  std::uint64_t map_version_ = 0;
  LocalMap local_;
  std::size_t rebuilds_ = 0;
};

struct MergeReport {
  std::vector<std::uint64_t> removed_ids;
  std::vector<std::uint64_t> added_ids;
};

/// Replaces history keyframes within replace_radius of any temporary keyframe.
/// Temporary keyframes get fresh ids and Merged(session) provenance.
MergeReport merge_temporary(GlobalMap& map, std::vector<Keyframe> temp, double replace_radius,
                            std::uint32_t session);

// Map file: "RLMP", version u32, count u64, then per keyframe: id u64,
// pose 7 * f64 (px py pz qx qy qz qw), leaf f32, provenance u32 (0 = initial,
// n = merged in session n), edge cloud, surface cloud (scan sub-format).
inline constexpr char kMapMagic[4] = {'R', 'L', 'M', 'P'};
inline constexpr std::uint32_t kMapVersion = 1;

std::vector<std::uint8_t> serialize_map(const GlobalMap& map);
/// Throws CorruptMap with the failing byte offset.
GlobalMap deserialize_map(std::span<const std::uint8_t> data);
void save_map(const GlobalMap& map, const std::filesystem::path& path);
GlobalMap load_map(const std::filesystem::path& path);

}  // namespace roll
