#include "roll/keymap.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

#include "roll/error.hpp"
#include "roll/scan_io.hpp"

namespace roll {

namespace {

bool same_cloud(const PointCloud& a, const PointCloud& b) {
  return a.timestamp == b.timestamp && a.points == b.points;
}

}  // namespace

Keyframe make_keyframe(std::uint64_t id, const Pose& obs_pose, const FeatureFrame& features,
                       double leaf, Provenance provenance) {
  Keyframe kf;
  kf.id = id;
  kf.obs_pose = obs_pose;
  kf.leaf = static_cast<float>(leaf);
  kf.features = downsample_features(features, leaf);
  kf.features.edges = quantize_cloud(kf.features.edges);
  kf.features.surfaces = quantize_cloud(kf.features.surfaces);
  kf.provenance = provenance;
  return kf;
}

void GlobalMap::insert(Keyframe kf) {
  if (kf.features.empty()) {
    throw Error(ErrorCode::InvalidParameter, "keyframe has no features");
  }
  const auto id = kf.id;
  if (!keyframes_.emplace(id, std::move(kf)).second) {
    throw Error(ErrorCode::InvalidParameter, "duplicate keyframe id " + std::to_string(id));
  }
  rebuild_index();
}

void GlobalMap::erase(std::uint64_t id) {
  if (keyframes_.erase(id) > 0) {
    rebuild_index();
  }
}

std::uint64_t GlobalMap::next_id() const {
  return keyframes_.empty() ? 0 : keyframes_.rbegin()->first + 1;
}

void GlobalMap::rebuild_index() {
  std::vector<Vec3> positions;
  positions.reserve(keyframes_.size());
  index_ids_.clear();
  for (const auto& [id, kf] : keyframes_) {
    positions.push_back(kf.obs_pose.p);
    index_ids_.push_back(id);
  }
  pose_index_ = SpatialIndex(std::move(positions));
  ++version_;
}

std::vector<std::uint64_t> GlobalMap::nearby(const Vec3& position, double radius) const {
  std::vector<std::uint64_t> ids;
  if (pose_index_.empty()) {
    return ids;
  }
  for (const auto& nb : pose_index_.radius_search(position, radius)) {
    ids.push_back(index_ids_[nb.index]);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

bool GlobalMap::operator==(const GlobalMap& other) const {
  if (keyframes_.size() != other.keyframes_.size()) {
    return false;
  }
  for (const auto& [id, kf] : keyframes_) {
    const auto it = other.keyframes_.find(id);
    if (it == other.keyframes_.end()) return false;
    const Keyframe& o = it->second;
    if (kf.obs_pose.p != o.obs_pose.p || kf.obs_pose.q.coeffs() != o.obs_pose.q.coeffs() ||
        kf.leaf != o.leaf || !(kf.provenance == o.provenance) ||
        !same_cloud(kf.features.edges, o.features.edges) ||
        !same_cloud(kf.features.surfaces, o.features.surfaces)) {
      return false;
    }
  }
  return true;
}

bool should_cull(const Pose& last_pose, const Pose& cur_pose, double trans_thresh,
                 double rot_thresh) {
  const double dp = (cur_pose.p - last_pose.p).norm();
  const double dr = rotation_angle(last_pose.q.conjugate() * cur_pose.q);
  return dp >= trans_thresh || dr >= rot_thresh;
}

LocalMap build_local_map(const GlobalMap& map, const Pose& guess, double radius) {
  const auto ids = map.nearby(guess.p, radius);
  if (ids.empty()) {
    throw Error(ErrorCode::NoNearbyKeyframes, "no keyframes within local-map radius");
  }
  LocalMap local;
  local.source_ids = ids;
  local.center = guess.p;
  local.leaf = map.at(map.index_id(map.pose_index().knn(guess.p, 1).front().index)).leaf;

  PointCloud edges, surfs;
  edges.frame = surfs.frame = FrameId::Map;
  for (const auto id : ids) {
    const Keyframe& kf = map.at(id);
    const Mat3 r = kf.obs_pose.rotation();
    for (const auto& p : kf.features.edges.points) edges.points.push_back(r * p + kf.obs_pose.p);
    for (const auto& p : kf.features.surfaces.points) surfs.points.push_back(r * p + kf.obs_pose.p);
  }
  local.edge_map = voxel_downsample(edges, local.leaf);
  local.surf_map = voxel_downsample(surfs, local.leaf);
  local.edge_index = SpatialIndex(local.edge_map.points);
  local.surf_index = SpatialIndex(local.surf_map.points);
  return local;
}

const LocalMap& LocalMapCache::get(const GlobalMap& map, const Pose& guess) {
  if (!built_ || map.version() != map_version_ ||
      (guess.p - local_.center).norm() > radius_ / 4.0) {
    built_ = false;
    local_ = build_local_map(map, guess, radius_);
    map_version_ = map.version();
    built_ = true;
    ++rebuilds_;
  }
  return local_;
}

MergeReport merge_temporary(GlobalMap& map, std::vector<Keyframe> temp, double replace_radius,
                            std::uint32_t session) {
  MergeReport report;
  if (temp.empty()) {
    return report;
  }
  std::set<std::uint64_t> doomed;
  for (const auto& kf : temp) {
    for (const auto id : map.nearby(kf.obs_pose.p, replace_radius)) {
      doomed.insert(id);
    }
  }
  for (const auto id : doomed) {
    map.erase(id);
    report.removed_ids.push_back(id);
  }
  std::uint64_t next = map.next_id();
  for (auto& kf : temp) {
    kf.id = next++;
    kf.provenance = Provenance::merged(session);
    report.added_ids.push_back(kf.id);
    map.insert(std::move(kf));
  }
  return report;
}

std::vector<std::uint8_t> serialize_map(const GlobalMap& map) {
  ByteWriter w;
  w.bytes(kMapMagic, 4);
  w.u32(kMapVersion);
  w.u64(map.size());
  for (const auto& [id, kf] : map.keyframes()) {
    w.u64(id);
    const auto& p = kf.obs_pose.p;
    const auto& q = kf.obs_pose.q;
    for (double v : {p.x(), p.y(), p.z(), q.x(), q.y(), q.z(), q.w()}) w.f64(v);
    w.f32(static_cast<float>(kf.leaf));
    w.u32(kf.provenance.kind == Provenance::Kind::Initial ? 0U : kf.provenance.session);
    encode_cloud(w, kf.features.edges);
    encode_cloud(w, kf.features.surfaces);
  }
  return w.take();
}

GlobalMap deserialize_map(std::span<const std::uint8_t> data) {
  ByteReader r(data, ErrorCode::CorruptMap);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMapMagic, 4) != 0) {
    r.fail("bad map magic");
  }
  if (const auto version = r.u32(); version != kMapVersion) {
    r.fail("unsupported map version " + std::to_string(version));
  }
  const std::uint64_t count = r.u64();
  GlobalMap map;
  std::vector<Keyframe> kfs;
  for (std::uint64_t k = 0; k < count; ++k) {
    Keyframe kf;
    kf.id = r.u64();
    double v[7];
    for (double& x : v) x = r.f64();
    kf.obs_pose.p = Vec3(v[0], v[1], v[2]);
    // stored bits are kept verbatim so re-serialization is byte-stable
    kf.obs_pose.q = Quat(v[6], v[3], v[4], v[5]);
    if (!is_finite(kf.obs_pose) || std::abs(kf.obs_pose.q.norm() - 1.0) > 1e-6) {
      r.fail("invalid keyframe pose");
    }
    kf.leaf = r.f32();
    const std::uint32_t prov = r.u32();
    kf.provenance = prov == 0 ? Provenance::initial() : Provenance::merged(prov);
    kf.features.edges = decode_cloud(r);
    kf.features.surfaces = decode_cloud(r);
    kf.features.timestamp = kf.features.edges.timestamp;
    kfs.push_back(std::move(kf));
  }
  if (r.remaining() != 0) {
    r.fail("trailing bytes after last keyframe");
  }
  for (auto& kf : kfs) {
    try {
      map.insert(std::move(kf));
    } catch (const Error& e) {
      throw Error(ErrorCode::CorruptMap, e.what());
    }
  }
  return map;
}

void save_map(const GlobalMap& map, const std::filesystem::path& path) {
  write_file(path, serialize_map(map));
}

GlobalMap load_map(const std::filesystem::path& path) {
  std::vector<std::uint8_t> data;
  try {
    data = read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::CorruptMap, e.what());
  }
  return deserialize_map(data);
}

}  // namespace roll
