#include "roll/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "roll/error.hpp"

namespace roll {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kAzimuthSlack = 1e-3;
// LOAM neighbour-suppression spacing: picking stops at a gap wider than this.
constexpr double kSuppressGapSq = 0.05;

void check_ring_order(const PointCloud& scan, std::uint32_t begin, std::uint32_t end) {
  double prev = 0.0;
  bool have_prev = false;
  double swept = 0.0;
  for (std::uint32_t i = begin; i < end; ++i) {
    const Vec3& p = scan.points[i];
    if (std::hypot(p.x(), p.y()) < 1e-9) {
      continue;
    }
    const double az = std::atan2(p.y(), p.x());
    if (have_prev) {
      // forward sweep; gaps without returns may exceed half a turn
      double d = std::fmod(az - prev + 4.0 * kPi, 2.0 * kPi);
      if (d > 2.0 * kPi - kAzimuthSlack) d -= 2.0 * kPi;
      swept += d;
      if (swept > 2.0 * kPi + kAzimuthSlack) {
        throw Error(ErrorCode::MalformedScan,
                    "azimuth regression at point " + std::to_string(i));
      }
    }
    prev = az;
    have_prev = true;
  }
}

}  // namespace

FeatureLabels classify_features(const PointCloud& scan, std::span<const std::uint32_t> rings,
                                const FeatureParams& params) {
  FeatureLabels labels;
  const std::size_t n = scan.size();
  labels.smoothness.assign(n, -1.0);
  if (n == 0) {
    return labels;
  }
  if (rings.size() < 2 || rings.front() != 0 || rings.back() != n ||
      !std::is_sorted(rings.begin(), rings.end())) {
    throw Error(ErrorCode::MalformedScan, "ring boundaries do not partition the scan");
  }

  const int w = params.half_window;
  std::vector<double> range(n);
  for (std::size_t i = 0; i < n; ++i) {
    range[i] = scan.points[i].norm();
  }
  std::vector<std::uint8_t> blocked(n, 0);

  for (std::size_t r = 0; r + 1 < rings.size(); ++r) {
    const std::uint32_t begin = rings[r];
    const std::uint32_t end = rings[r + 1];
    check_ring_order(scan, begin, end);
    if (end - begin < static_cast<std::uint32_t>(2 * w + 1)) {
      continue;
    }
    const std::uint32_t first = begin + w;
    const std::uint32_t last = end - w;  // exclusive

    for (std::uint32_t i = first; i < last; ++i) {
      Vec3 sum = Vec3::Zero();
      for (int j = 1; j <= w; ++j) {
        sum += scan.points[i - j] - scan.points[i];
        sum += scan.points[i + j] - scan.points[i];
      }
      labels.smoothness[i] = sum.norm() / (2.0 * w * range[i]);
    }

    // Occluded and parallel-beam returns are never candidates.
    for (std::uint32_t i = first; i + 1 < last; ++i) {
      const double gap = range[i + 1] - range[i];
      if (gap < -params.range_gap) {
        // i is the far side of a depth step
        for (int l = 0; l <= w; ++l) blocked[i - l] = 1;
      } else if (gap > params.range_gap) {
        for (int l = 1; l <= w + 1 && i + l < end; ++l) blocked[i + l] = 1;
      }
    }
    for (std::uint32_t i = first; i < last; ++i) {
      const double lim = params.parallel_beam_ratio * range[i] * range[i];
      const double prev = (scan.points[i] - scan.points[i - 1]).squaredNorm();
      const double next = (scan.points[i + 1] - scan.points[i]).squaredNorm();
      if (prev > lim && next > lim) {
        blocked[i] = 1;
      }
    }

    // Neighbour suppression stays inside [lo, hi) so sectors pick independently.
    auto suppress = [&](std::uint32_t i, std::uint32_t lo, std::uint32_t hi) {
      for (int l = 1; l <= w && i + l < hi; ++l) {
        if ((scan.points[i + l] - scan.points[i + l - 1]).squaredNorm() > kSuppressGapSq) break;
        blocked[i + l] = 1;
      }
      for (int l = 1; l <= w && i - l >= lo; ++l) {
        if ((scan.points[i - l] - scan.points[i - l + 1]).squaredNorm() > kSuppressGapSq) break;
        blocked[i - l] = 1;
      }
    };

    const std::uint32_t span_len = last - first;
    auto sector_order = [&](int s, std::uint32_t& sp, std::uint32_t& ep) {
      sp = first + span_len * s / params.sectors;
      ep = first + span_len * (s + 1) / params.sectors;
      std::vector<std::uint32_t> order(ep - sp);
      std::iota(order.begin(), order.end(), sp);
      std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return labels.smoothness[a] < labels.smoothness[b];
      });
      return order;
    };

    // All edges of the ring are picked before any surface.
    for (int s = 0; s < params.sectors; ++s) {
      std::uint32_t sp, ep;
      const auto order = sector_order(s, sp, ep);
      int taken = 0;
      for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const std::uint32_t i = *it;
        if (labels.smoothness[i] <= params.edge_threshold) break;
        if (blocked[i]) continue;
        if (params.edges_per_sector >= 0 && taken >= params.edges_per_sector) break;
        labels.edges.push_back(i);
        blocked[i] = 1;
        ++taken;
        suppress(i, sp, ep);
      }
    }
    for (int s = 0; s < params.sectors; ++s) {
      std::uint32_t sp, ep;
      const auto order = sector_order(s, sp, ep);
      int taken = 0;
      for (const std::uint32_t i : order) {
        if (labels.smoothness[i] >= params.surf_threshold) break;
        if (blocked[i]) continue;
        if (params.surfs_per_sector >= 0 && taken >= params.surfs_per_sector) break;
        labels.surfaces.push_back(i);
        blocked[i] = 1;
        ++taken;
        suppress(i, sp, ep);
      }
    }
  }
  std::sort(labels.edges.begin(), labels.edges.end());
  std::sort(labels.surfaces.begin(), labels.surfaces.end());
  return labels;
}

FeatureFrame extract_features(const PointCloud& scan, std::span<const std::uint32_t> rings,
                              const FeatureParams& params) {
  FeatureFrame frame;
  frame.timestamp = scan.timestamp;
  frame.edges.timestamp = frame.surfaces.timestamp = scan.timestamp;
  if (scan.empty()) {
    return frame;
  }
  const FeatureLabels labels = classify_features(scan, rings, params);
  frame.edges.points.reserve(labels.edges.size());
  for (auto i : labels.edges) frame.edges.points.push_back(scan.points[i]);
  frame.surfaces.points.reserve(labels.surfaces.size());
  for (auto i : labels.surfaces) frame.surfaces.points.push_back(scan.points[i]);
  return frame;
}

double confined_ratio(const PointCloud& scan, double d_c) {
  if (scan.empty()) {
    return 0.0;
  }
  const double d2 = d_c * d_c;
  const auto close = std::count_if(scan.points.begin(), scan.points.end(),
                                   [&](const Vec3& p) { return p.squaredNorm() < d2; });
  return static_cast<double>(close) / static_cast<double>(scan.size());
}

double choose_voxel_size(double ratio, double r_c, double open_leaf, double confined_leaf) {
  if (!(confined_leaf < open_leaf) || !(confined_leaf > 0.0)) {
    throw Error(ErrorCode::InvalidParameter, "confined_leaf must be in (0, open_leaf)");
  }
  return ratio > r_c ? confined_leaf : open_leaf;
}

FeatureFrame downsample_features(const FeatureFrame& frame, double leaf) {
  FeatureFrame out;
  out.timestamp = frame.timestamp;
  out.confined = frame.confined;
  out.edges = voxel_downsample(frame.edges, leaf);
  out.surfaces = voxel_downsample(frame.surfaces, leaf);
  return out;
}

}  // namespace roll
