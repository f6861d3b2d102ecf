#include "roll/scan_io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "roll/error.hpp"

namespace roll {

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& buf, T value) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
}

template <typename T>
T get_le(const std::uint8_t* p) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(p[i]) << (8 * i);
  }
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) {
    out.push_back(cur);
  }
  return out;
}

}  // namespace

void ByteWriter::bytes(const void* data, std::size_t n) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  buf_.insert(buf_.end(), p, p + n);
}
void ByteWriter::u32(std::uint32_t v) { put_le(buf_, v); }
void ByteWriter::u64(std::uint64_t v) { put_le(buf_, v); }
void ByteWriter::f32(float v) { put_le(buf_, std::bit_cast<std::uint32_t>(v)); }
void ByteWriter::f64(double v) { put_le(buf_, std::bit_cast<std::uint64_t>(v)); }

ByteReader::ByteReader(std::span<const std::uint8_t> data, ErrorCode on_error)
    : data_(data), code_(on_error) {}

void ByteReader::fail(const std::string& why) const {
  throw Error(code_, why + " at byte offset " + std::to_string(pos_));
}

void ByteReader::bytes(void* out, std::size_t n) {
  if (remaining() < n) {
    fail("truncated data");
  }
  std::memcpy(out, data_.data() + pos_, n);
  pos_ += n;
}

std::uint32_t ByteReader::u32() {
  if (remaining() < 4) fail("truncated data");
  const auto v = get_le<std::uint32_t>(data_.data() + pos_);
  pos_ += 4;
  return v;
}

std::uint64_t ByteReader::u64() {
  if (remaining() < 8) fail("truncated data");
  const auto v = get_le<std::uint64_t>(data_.data() + pos_);
  pos_ += 8;
  return v;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }
double ByteReader::f64() { return std::bit_cast<double>(u64()); }

void encode_cloud(ByteWriter& out, const PointCloud& cloud) {
  out.bytes(kScanMagic, 4);
  out.u32(kScanVersion);
  out.f64(cloud.timestamp);
  out.u32(static_cast<std::uint32_t>(cloud.size()));
  for (const auto& p : cloud.points) {
    out.f32(static_cast<float>(p.x()));
    out.f32(static_cast<float>(p.y()));
    out.f32(static_cast<float>(p.z()));
  }
}

PointCloud decode_cloud(ByteReader& in) {
  char magic[4];
  in.bytes(magic, 4);
  if (std::memcmp(magic, kScanMagic, 4) != 0) {
    in.fail("bad scan magic");
  }
  if (const auto version = in.u32(); version != kScanVersion) {
    in.fail("unsupported scan version " + std::to_string(version));
  }
  PointCloud cloud;
  cloud.timestamp = in.f64();
  const std::uint32_t count = in.u32();
  if (in.remaining() / 12 < count) {
    in.fail("truncated point data");
  }
  cloud.points.resize(count);
  for (auto& p : cloud.points) {
    const double x = in.f32();
    const double y = in.f32();
    const double z = in.f32();
    p = Vec3(x, y, z);
  }
  return cloud;
}

PointCloud quantize_cloud(const PointCloud& cloud) {
  PointCloud out = cloud;
  // flat loop: gcc 11 miscompiles the per-point form's vector epilogue
  double* d = out.points.empty() ? nullptr : out.points.front().data();
  for (std::size_t i = 0; i < 3 * out.points.size(); ++i) d[i] = static_cast<float>(d[i]);
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::CorruptFile, "cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::InvalidParameter, "cannot write " + path.string());
  }
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

void write_scan(const std::filesystem::path& path, const PointCloud& cloud) {
  ByteWriter w;
  encode_cloud(w, cloud);
  write_file(path, w.buffer());
}

PointCloud read_scan(const std::filesystem::path& path) {
  const auto data = read_file(path);
  ByteReader r(data, ErrorCode::CorruptFile);
  return decode_cloud(r);
}

std::string format_trajectory_csv(const Trajectory& traj, const std::string& source) {
  std::string out = source.empty() ? "t,px,py,pz,qx,qy,qz,qw\n" : "t,px,py,pz,qx,qy,qz,qw,source\n";
  char line[512];
  for (const auto& tp : traj) {
    const auto& p = tp.pose.p;
    const auto& q = tp.pose.q;
    std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", tp.t,
                  p.x(), p.y(), p.z(), q.x(), q.y(), q.z(), q.w());
    out += line;
    if (!source.empty()) {
      out += ',';
      out += source;
    }
    out += '\n';
  }
  return out;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                          const std::string& source) {
  const std::string text = format_trajectory_csv(traj, source);
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::CorruptFile, "cannot open " + path.string());
  }
  Trajectory traj;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || line[0] == 't') {
      continue;
    }
    const auto cols = split(line, ',');
    if (cols.size() < 8) {
      throw Error(ErrorCode::CorruptFile,
                  path.string() + ":" + std::to_string(lineno) + ": expected 8 columns");
    }
    double v[8];
    try {
      for (int i = 0; i < 8; ++i) v[i] = std::stod(cols[i]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::CorruptFile,
                  path.string() + ":" + std::to_string(lineno) + ": bad number");
    }
    const Quat q(v[7], v[4], v[5], v[6]);
    Pose pose(Vec3(v[1], v[2], v[3]), q);
    if (std::abs(q.norm() - 1.0) < 1e-12) pose.q = q;  // keep written bits
    traj.push_back({v[0], pose});
  }
  return traj;
}

void write_rings_csv(const std::filesystem::path& path,
                     const std::vector<std::vector<std::uint32_t>>& rings) {
  std::ofstream out(path, std::ios::trunc);
  for (std::size_t i = 0; i < rings.size(); ++i) {
    out << i;
    for (auto b : rings[i]) out << ',' << b;
    out << '\n';
  }
}

std::vector<std::vector<std::uint32_t>> read_rings_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::CorruptFile, "cannot open " + path.string());
  }
  std::vector<std::vector<std::uint32_t>> rings;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cols = split(line, ',');
    std::vector<std::uint32_t> b;
    for (std::size_t i = 1; i < cols.size(); ++i) {
      b.push_back(static_cast<std::uint32_t>(std::stoul(cols[i])));
    }
    rings.push_back(std::move(b));
  }
  return rings;
}

}  // namespace roll
