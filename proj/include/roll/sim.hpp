#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "roll/cloud.hpp"
#include "roll/exec.hpp"
#include "roll/scan_io.hpp"

namespace roll {

struct Primitive {
  enum class Kind : std::uint8_t { Plane, Box, Cylinder };
  Kind kind = Kind::Box;
  std::uint32_t id = 0;
  std::string tag;
  // Plane: point and local z axis as normal. Box and cylinder: centre, with
  // the cylinder axis along local z.
  Pose pose;
  // Plane: (extent_x, extent_y, -), non-positive extents mean unbounded.
  // Box: full side lengths. Cylinder: (radius, -, height).
  Vec3 dims = Vec3::Zero();

  static Primitive plane(const Vec3& point, const Vec3& normal, double extent_x = 0.0,
                         double extent_y = 0.0, std::string tag = "ground");
  static Primitive box(const Vec3& center, double yaw, const Vec3& size, std::string tag = "box");
  static Primitive cylinder(const Vec3& center, double radius, double height,
                            std::string tag = "pole");

  bool bounded() const;
  /// Ray parameter of the nearest hit beyond t_min, or a negative value.
  double intersect(const Vec3& origin, const Vec3& dir, double t_min) const;
  /// Distance from x to the primitive's surface.
  double surface_distance(const Vec3& x) const;
  /// Bounding sphere; radius is infinite for unbounded planes.
  Vec3 bound_center() const;
  double bound_radius() const;
};

struct SceneChange;

class World {
 public:
  /// Assigns and returns the next free id (ids start at 1).
  std::uint32_t add(Primitive p);
  const std::vector<Primitive>& primitives() const { return prims_; }
  const Primitive* find(std::uint32_t id) const;
  bool has_tag(const std::string& tag) const;
  std::size_t size() const { return prims_.size(); }

 private:
  friend World apply_scene_change(const World&, const SceneChange&);
  std::vector<Primitive> prims_;
  std::uint32_t next_id_ = 1;
};

struct SensorModel {
  std::vector<double> elevations_deg;
  int azimuth_steps = 900;
  double max_range = 80.0;
  double min_range = 0.3;
  double range_noise = 0.0;

  /// 16 rings from -15 to +15 degrees in 2 degree steps.
  static SensorModel default16();
  void validate() const;
};

struct Scan {
  PointCloud cloud;                   // sensor frame, ring-major then azimuth
  std::vector<std::uint32_t> rings;   // CSR offsets, size = rings + 1
};

/// Deterministic in `seed`; the noise of each ray depends only on the seed
/// and the ray indices, so parallel and serial casts agree bit for bit.
Scan raycast_scan(const World& world, const SensorModel& sensor, const Pose& pose,
                  std::uint64_t seed, Exec exec = Exec::Parallel);

/// Path built from constant-curvature pieces; turn = 0 is a straight piece.
struct PathSegment {
  double length = 0.0;
  double turn = 0.0;  // heading change over the piece, radians, left positive
};

struct TrajectoryParams {
  std::vector<PathSegment> segments;
  Pose origin;
  double speed = 1.0;  // m/s
  double rate = 10.0;  // Hz
  double t0 = 0.0;
};

enum class TrajectoryKind { Loop, Corridor, Figure8 };

/// Preset paths: loop (radius), corridor (straight, length), figure8 (two
/// tangent circles of the given radius).
TrajectoryParams trajectory_preset(TrajectoryKind kind, double size, const Pose& origin = {},
                                   double speed = 1.0, double rate = 10.0);
/// round(total_length * rate / speed) poses evenly spaced in arc length,
/// first at the origin and last at the path end.
Trajectory make_trajectory(const TrajectoryParams& params);

struct OdomModel {
  Vec6 drift_per_meter = Vec6::Zero();  // (rho, phi) added per metre travelled
  Vec6 noise_sigma = Vec6::Zero();      // per-step standard deviation
  std::uint64_t seed = 0;
};

Trajectory drift_odometry(const Trajectory& truth, const OdomModel& model);

struct SceneChange {
  enum class Kind : std::uint8_t { Remove, Add, Move };
  Kind kind = Kind::Remove;
  std::string tag;      // Remove
  Primitive primitive;  // Add
  std::uint32_t id = 0; // Move
  Pose delta;           // Move: new pose = delta * old pose

  static SceneChange remove(std::string tag);
  static SceneChange add(Primitive p);
  static SceneChange move(std::uint32_t id, const Pose& delta);
};

/// Edited copy. Throws InvalidParameter when a referenced tag or id is absent.
World apply_scene_change(const World& world, const SceneChange& change);

/// Standard normal variate from a counter-based hash of the inputs.
double hashed_gaussian(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c);

}  // namespace roll
