#include "roll/cloud.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "roll/error.hpp"

namespace roll {

namespace {

constexpr std::uint32_t kLeafSize = 8;

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<std::uint64_t>(k.y) + 0x632BE59BD9B4E019ULL + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(k.z) + 0x85EBCA77C2B2AE63ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

bool closer(const Neighbor& a, const Neighbor& b) {
  return a.dist_sq < b.dist_sq || (a.dist_sq == b.dist_sq && a.index < b.index);
}

}  // namespace

double Neighbor::distance() const { return std::sqrt(dist_sq); }

PointCloud transform_cloud(const PointCloud& cloud, const Pose& pose, FrameId target) {
  PointCloud out;
  out.timestamp = cloud.timestamp;
  out.frame = target;
  out.points.reserve(cloud.size());
  const Mat3 r = pose.rotation();
  for (const auto& p : cloud.points) {
    out.points.push_back(r * p + pose.p);
  }
  return out;
}

VoxelKey voxel_key(const Vec3& p, double leaf) {
  return {static_cast<std::int64_t>(std::floor(p.x() / leaf)),
          static_cast<std::int64_t>(std::floor(p.y() / leaf)),
          static_cast<std::int64_t>(std::floor(p.z() / leaf))};
}

PointCloud voxel_downsample(const PointCloud& cloud, double leaf) {
  if (!(leaf > 0.0)) {
    throw Error(ErrorCode::InvalidParameter, "voxel leaf must be positive");
  }
  struct Acc {
    Vec3 sum = Vec3::Zero();
    std::uint32_t count = 0;
  };
  std::unordered_map<VoxelKey, Acc, VoxelKeyHash> grid;
  grid.reserve(cloud.size());
  for (const auto& p : cloud.points) {
    auto& acc = grid[voxel_key(p, leaf)];
    acc.sum += p;
    ++acc.count;
  }
  std::vector<std::pair<VoxelKey, Vec3>> cells;
  cells.reserve(grid.size());
  for (const auto& [key, acc] : grid) {
    cells.emplace_back(key, acc.sum / static_cast<double>(acc.count));
  }
  std::sort(cells.begin(), cells.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  PointCloud out;
  out.timestamp = cloud.timestamp;
  out.frame = cloud.frame;
  out.points.reserve(cells.size());
  for (const auto& cell : cells) {
    out.points.push_back(cell.second);
  }
  return out;
}

SpatialIndex::SpatialIndex(std::vector<Vec3> points) : points_(std::move(points)) {
  order_.resize(points_.size());
  for (std::uint32_t i = 0; i < order_.size(); ++i) {
    order_[i] = i;
  }
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    build(0, static_cast<std::uint32_t>(points_.size()));
  }
}

std::int32_t SpatialIndex::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({});
  if (end - begin <= kLeafSize) {
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }
  Vec3 lo = points_[order_[begin]];
  Vec3 hi = lo;
  for (std::uint32_t i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int dim = 0;
  (hi - lo).maxCoeff(&dim);
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     return points_[a][dim] < points_[b][dim];
                   });
  const double split = points_[order_[mid]][dim];
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[id].dim = static_cast<std::uint8_t>(dim);
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

std::size_t SpatialIndex::knn(const Vec3& query, std::size_t k, std::span<Neighbor> out) const {
  if (points_.empty()) {
    throw Error(ErrorCode::EmptyIndex, "knn on empty index");
  }
  k = std::min({k, points_.size(), out.size()});
  if (k == 0) {
    return 0;
  }
  // `out[0, count)` is kept sorted ascending; insertion is O(k), fine for small k.
  std::size_t count = 0;
  auto offer = [&](std::uint32_t idx) {
    const Neighbor cand{idx, (points_[idx] - query).squaredNorm()};
    if (count == k && !closer(cand, out[k - 1])) {
      return;
    }
    std::size_t pos = count < k ? count++ : k - 1;
    while (pos > 0 && closer(cand, out[pos - 1])) {
      out[pos] = out[pos - 1];
      --pos;
    }
    out[pos] = cand;
  };

  std::int32_t stack[64];
  double stack_bound[64];
  int top = 0;
  stack[top] = 0;
  stack_bound[top++] = 0.0;
  while (top > 0) {
    --top;
    const std::int32_t id = stack[top];
    if (count == k && stack_bound[top] > out[k - 1].dist_sq) {
      continue;
    }
    const Node& node = nodes_[id];
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        offer(order_[i]);
      }
      continue;
    }
    const double diff = query[node.dim] - node.split;
    const std::int32_t near = diff < 0.0 ? node.left : node.right;
    const std::int32_t far = diff < 0.0 ? node.right : node.left;
    // Far side pushed first so the near side is processed first.
    stack[top] = far;
    stack_bound[top++] = diff * diff;
    stack[top] = near;
    stack_bound[top++] = 0.0;
  }
  return count;
}

std::vector<Neighbor> SpatialIndex::knn(const Vec3& query, std::size_t k) const {
  std::vector<Neighbor> out(std::min(k, points_.size()));
  if (points_.empty()) {
    throw Error(ErrorCode::EmptyIndex, "knn on empty index");
  }
  out.resize(knn(query, k, out));
  return out;
}

std::vector<Neighbor> SpatialIndex::radius_search(const Vec3& query, double r) const {
  if (!(r > 0.0)) {
    throw Error(ErrorCode::InvalidParameter, "search radius must be positive");
  }
  std::vector<Neighbor> out;
  if (points_.empty()) {
    return out;
  }
  const double r2 = r * r;
  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const std::uint32_t idx = order_[i];
        const double d2 = (points_[idx] - query).squaredNorm();
        if (d2 <= r2) {
          out.push_back({idx, d2});
        }
      }
      continue;
    }
    const double diff = query[node.dim] - node.split;
    const std::int32_t near = diff < 0.0 ? node.left : node.right;
    const std::int32_t far = diff < 0.0 ? node.right : node.left;
    stack.push_back(near);
    if (diff * diff <= r2) {
      stack.push_back(far);
    }
  }
  std::sort(out.begin(), out.end(), closer);
  return out;
}

}  // namespace roll
