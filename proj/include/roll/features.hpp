#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "roll/cloud.hpp"

namespace roll {

struct FeatureParams {
  double edge_threshold = 0.02;
  double surf_threshold = 0.005;
  int sectors = 6;
  int edges_per_sector = 2;
  int surfs_per_sector = 4;
  int half_window = 5;
  // Depth discontinuity between consecutive returns that marks the far side
  // as occluded.
  double range_gap = 0.3;
  // Parallel-beam rejection: squared spacing to both neighbours above this
  // fraction of the squared range.
  double parallel_beam_ratio = 2e-4;
};

/// Edge set E_k and surface set S_k of one scan, both in the lidar frame.
struct FeatureFrame {
  PointCloud edges;
  PointCloud surfaces;
  double timestamp = 0.0;
  bool confined = false;

  std::size_t size() const { return edges.size() + surfaces.size(); }
  bool empty() const { return edges.empty() && surfaces.empty(); }
};

struct FeatureLabels {
  std::vector<std::uint32_t> edges;     // indices into the scan
  std::vector<std::uint32_t> surfaces;  // disjoint from edges
  std::vector<double> smoothness;       // per point; negative where undefined
};

/// Ring boundaries are CSR offsets: ring r spans [rings[r], rings[r+1]).
/// Rings shorter than 2 * half_window + 1 contribute no features.
/// Throws MalformedScan for bad offsets or azimuth regression within a ring.
FeatureLabels classify_features(const PointCloud& scan, std::span<const std::uint32_t> rings,
                                const FeatureParams& params = {});

FeatureFrame extract_features(const PointCloud& scan, std::span<const std::uint32_t> rings,
                              const FeatureParams& params = {});

/// Fraction of points closer than d_c to the sensor; 0 for an empty scan.
double confined_ratio(const PointCloud& scan, double d_c);

/// confined_leaf when ratio > r_c, else open_leaf.
/// Throws InvalidParameter unless confined_leaf < open_leaf.
double choose_voxel_size(double ratio, double r_c, double open_leaf, double confined_leaf);

FeatureFrame downsample_features(const FeatureFrame& frame, double leaf);

}  // namespace roll
