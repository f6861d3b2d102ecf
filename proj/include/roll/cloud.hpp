#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "roll/se3.hpp"

namespace roll {

enum class FrameId : std::uint8_t { Lidar, Odom, Map };

struct PointCloud {
  std::vector<Vec3> points;
  double timestamp = 0.0;
  FrameId frame = FrameId::Lidar;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

PointCloud transform_cloud(const PointCloud& cloud, const Pose& pose, FrameId target);

/// Voxel-grid filter: one centroid per occupied voxel of side `leaf`, emitted
/// in lexicographic voxel-key order. Throws InvalidParameter for leaf <= 0.
PointCloud voxel_downsample(const PointCloud& cloud, double leaf);

struct VoxelKey {
  std::int64_t x, y, z;
  auto operator<=>(const VoxelKey&) const = default;
};

VoxelKey voxel_key(const Vec3& p, double leaf);

struct Neighbor {
  std::uint32_t index;  // position in the indexed point list
  double dist_sq;

  double distance() const;
};

/// Balanced k-d tree over 3D points. Immutable after construction; concurrent
/// queries are safe. Query results are sorted by (squared distance, index),
/// which makes them identical to an exhaustive scan.
class SpatialIndex {
 public:
  SpatialIndex() = default;
  explicit SpatialIndex(std::vector<Vec3> points);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Vec3& point(std::uint32_t i) const { return points_[i]; }
  const std::vector<Vec3>& points() const { return points_; }

  /// min(k, size) nearest points. Throws EmptyIndex on an empty tree.
  std::vector<Neighbor> knn(const Vec3& query, std::size_t k) const;
  /// Allocation-free variant; returns the number of neighbors written.
  std::size_t knn(const Vec3& query, std::size_t k, std::span<Neighbor> out) const;

  /// All points with distance <= r. Throws InvalidParameter for r <= 0.
  std::vector<Neighbor> radius_search(const Vec3& query, double r) const;

 private:
  struct Node {
    std::uint32_t begin = 0, end = 0;  // range into order_ (leaves only)
    std::int32_t left = -1, right = -1;
    std::uint8_t dim = 0;
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace roll
