#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "roll/cloud.hpp"
#include "roll/error.hpp"

namespace roll {

struct TimedPose {
  double t = 0.0;
  Pose pose;
};
using Trajectory = std::vector<TimedPose>;

// Scan file: "RLSC", version u32, timestamp f64, count u32, count * 3 * f32.
// Little-endian throughout.
inline constexpr char kScanMagic[4] = {'R', 'L', 'S', 'C'};
inline constexpr std::uint32_t kScanVersion = 1;

/// Little-endian byte writer/reader used by the scan and map formats.
class ByteWriter {
 public:
  void bytes(const void* data, std::size_t n);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f32(float v);
  void f64(double v);
  const std::vector<std::uint8_t>& buffer() const { return buf_; }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> data, ErrorCode on_error);
  void bytes(void* out, std::size_t n);
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  double f64();
  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  [[noreturn]] void fail(const std::string& why) const;

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  ErrorCode code_;
};

void encode_cloud(ByteWriter& out, const PointCloud& cloud);
PointCloud decode_cloud(ByteReader& in);

/// Coordinates rounded through float, the on-disk precision.
PointCloud quantize_cloud(const PointCloud& cloud);

void write_scan(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud read_scan(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data);

/// CSV `t,px,py,pz,qx,qy,qz,qw[,source]` with a header row.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                          const std::string& source = {});
std::string format_trajectory_csv(const Trajectory& traj, const std::string& source = {});
Trajectory read_trajectory_csv(const std::filesystem::path& path);

/// Per-session ring sidecar: one row per scan, `index,start0,start1,...,end`.
void write_rings_csv(const std::filesystem::path& path,
                     const std::vector<std::vector<std::uint32_t>>& rings);
std::vector<std::vector<std::uint32_t>> read_rings_csv(const std::filesystem::path& path);

}  // namespace roll
