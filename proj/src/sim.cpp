#include "roll/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "roll/error.hpp"

namespace roll {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTmin = 1e-6;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double unit_open(std::uint64_t h) {
  return (static_cast<double>(h >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

struct Local {
  Vec3 o, d;
};

Local to_local(const Pose& pose, const Vec3& origin, const Vec3& dir) {
  const Mat3 Rt = pose.rotation().transpose();
  return {Rt * (origin - pose.p), Rt * dir};
}

double signed_box_distance(const Vec3& q) {
  const Vec3 outside = q.cwiseMax(0.0);
  return outside.norm() + std::min(q.maxCoeff(), 0.0);
}

}  // namespace

double hashed_gaussian(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ (b * 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ (c * 0x85157af5ULL));
  const double u1 = unit_open(h);
  const double u2 = unit_open(splitmix64(h));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

Primitive Primitive::plane(const Vec3& point, const Vec3& normal, double extent_x,
                           double extent_y, std::string tag) {
  Primitive p;
  p.kind = Kind::Plane;
  p.tag = std::move(tag);
  p.pose = Pose(point, Quat::FromTwoVectors(Vec3::UnitZ(), normal.normalized()));
  p.dims = Vec3(extent_x, extent_y, 0.0);
  return p;
}

Primitive Primitive::box(const Vec3& center, double yaw, const Vec3& size, std::string tag) {
  Primitive p;
  p.kind = Kind::Box;
  p.tag = std::move(tag);
  p.pose = Pose(center, Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ())));
  p.dims = size;
  return p;
}

Primitive Primitive::cylinder(const Vec3& center, double radius, double height, std::string tag) {
  Primitive p;
  p.kind = Kind::Cylinder;
  p.tag = std::move(tag);
  p.pose = Pose(center, Quat::Identity());
  p.dims = Vec3(radius, radius, height);
  return p;
}

bool Primitive::bounded() const {
  return kind != Kind::Plane || (dims.x() > 0.0 && dims.y() > 0.0);
}

double Primitive::intersect(const Vec3& origin, const Vec3& dir, double t_min) const {
  const Local l = to_local(pose, origin, dir);
  switch (kind) {
    case Kind::Plane: {
      if (std::abs(l.d.z()) < 1e-15) return -1.0;
      const double t = -l.o.z() / l.d.z();
      if (!(t > t_min)) return -1.0;
      if (bounded()) {
        const Vec3 x = l.o + t * l.d;
        if (std::abs(x.x()) > 0.5 * dims.x() || std::abs(x.y()) > 0.5 * dims.y()) return -1.0;
      }
      return t;
    }
    case Kind::Box: {
      const Vec3 h = 0.5 * dims;
      double tnear = -kInf, tfar = kInf;
      for (int i = 0; i < 3; ++i) {
        if (std::abs(l.d[i]) < 1e-15) {
          if (std::abs(l.o[i]) > h[i]) return -1.0;
          continue;
        }
        double t1 = (-h[i] - l.o[i]) / l.d[i];
        double t2 = (h[i] - l.o[i]) / l.d[i];
        if (t1 > t2) std::swap(t1, t2);
        tnear = std::max(tnear, t1);
        tfar = std::min(tfar, t2);
      }
      if (tnear > tfar || tfar <= t_min) return -1.0;
      return tnear > t_min ? tnear : tfar;
    }
    case Kind::Cylinder: {
      const double r = dims.x();
      const double hh = 0.5 * dims.z();
      double best = -1.0;
      auto consider = [&](double t) {
        if (t > t_min && (best < 0.0 || t < best)) best = t;
      };
      const double a = l.d.x() * l.d.x() + l.d.y() * l.d.y();
      if (a > 1e-30) {
        const double b = 2.0 * (l.o.x() * l.d.x() + l.o.y() * l.d.y());
        const double c = l.o.x() * l.o.x() + l.o.y() * l.o.y() - r * r;
        const double disc = b * b - 4.0 * a * c;
        if (disc >= 0.0) {
          const double sq = std::sqrt(disc);
          for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
            if (std::abs(l.o.z() + t * l.d.z()) <= hh) consider(t);
          }
        }
      }
      if (std::abs(l.d.z()) > 1e-15) {
        for (double zc : {-hh, hh}) {
          const double t = (zc - l.o.z()) / l.d.z();
          const Vec3 x = l.o + t * l.d;
          if (x.x() * x.x() + x.y() * x.y() <= r * r) consider(t);
        }
      }
      return best;
    }
  }
  return -1.0;
}

double Primitive::surface_distance(const Vec3& x) const {
  const Vec3 q = pose.rotation().transpose() * (x - pose.p);
  switch (kind) {
    case Kind::Plane: {
      if (!bounded()) return std::abs(q.z());
      const double ox = std::max(std::abs(q.x()) - 0.5 * dims.x(), 0.0);
      const double oy = std::max(std::abs(q.y()) - 0.5 * dims.y(), 0.0);
      return std::sqrt(q.z() * q.z() + ox * ox + oy * oy);
    }
    case Kind::Box:
      return std::abs(signed_box_distance(q.cwiseAbs() - 0.5 * dims));
    case Kind::Cylinder: {
      const double radial = std::hypot(q.x(), q.y()) - dims.x();
      const double axial = std::abs(q.z()) - 0.5 * dims.z();
      const double out = std::hypot(std::max(radial, 0.0), std::max(axial, 0.0));
      return std::abs(out + std::min(std::max(radial, axial), 0.0));
    }
  }
  return kInf;
}

Vec3 Primitive::bound_center() const { return pose.p; }

double Primitive::bound_radius() const {
  switch (kind) {
    case Kind::Plane:
      return bounded() ? 0.5 * std::hypot(dims.x(), dims.y()) : kInf;
    case Kind::Box:
      return 0.5 * dims.norm();
    case Kind::Cylinder:
      return std::hypot(dims.x(), 0.5 * dims.z());
  }
  return kInf;
}

std::uint32_t World::add(Primitive p) {
  p.id = next_id_++;
  prims_.push_back(std::move(p));
  return prims_.back().id;
}

const Primitive* World::find(std::uint32_t id) const {
  for (const auto& p : prims_) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

bool World::has_tag(const std::string& tag) const {
  return std::any_of(prims_.begin(), prims_.end(), [&](const auto& p) { return p.tag == tag; });
}

SensorModel SensorModel::default16() {
  SensorModel s;
  for (int i = 0; i < 16; ++i) s.elevations_deg.push_back(-15.0 + 2.0 * i);
  return s;
}

void SensorModel::validate() const {
  if (elevations_deg.empty() || !std::is_sorted(elevations_deg.begin(), elevations_deg.end()) ||
      std::adjacent_find(elevations_deg.begin(), elevations_deg.end()) != elevations_deg.end()) {
    throw Error(ErrorCode::InvalidParameter, "ring elevations must increase strictly");
  }
  if (!(max_range > 0.0) || azimuth_steps < 1 || min_range < 0.0 || range_noise < 0.0) {
    throw Error(ErrorCode::InvalidParameter, "invalid sensor model");
  }
}

Scan raycast_scan(const World& world, const SensorModel& sensor, const Pose& pose,
                  std::uint64_t seed, Exec exec) {
  sensor.validate();
  if (!is_finite(pose)) {
    throw Error(ErrorCode::InvalidParameter, "non-finite sensor pose");
  }
  const auto& prims = world.primitives();
  const int steps = sensor.azimuth_steps;
  const int rings = static_cast<int>(sensor.elevations_deg.size());
  const Mat3 R = pose.rotation();
  const Mat3 Rt = R.transpose();

  // candidate primitives per azimuth index, from bounding-sphere extents
  std::vector<std::uint32_t> always;
  std::vector<std::vector<std::uint32_t>> bins(static_cast<std::size_t>(steps));
  const double step_angle = 2.0 * kPi / steps;
  for (std::uint32_t k = 0; k < prims.size(); ++k) {
    const Primitive& pr = prims[k];
    const double r = pr.bound_radius();
    if (!std::isfinite(r)) {
      always.push_back(k);
      continue;
    }
    const Vec3 c = Rt * (pr.bound_center() - pose.p);
    if (c.norm() - r > sensor.max_range) continue;
    const double rho = std::hypot(c.x(), c.y());
    if (rho <= r + 1e-9) {
      always.push_back(k);
      continue;
    }
    const double half = std::asin(r / rho) + step_angle;
    const double az = std::atan2(c.y(), c.x());
    const int j0 = static_cast<int>(std::floor((az - half) / step_angle));
    const int j1 = static_cast<int>(std::ceil((az + half) / step_angle));
    for (int j = j0; j <= j1 && j < j0 + steps; ++j) {
      bins[static_cast<std::size_t>(((j % steps) + steps) % steps)].push_back(k);
    }
  }

  const std::size_t total = static_cast<std::size_t>(rings) * static_cast<std::size_t>(steps);
  std::vector<Vec3> hit(total);
  std::vector<std::uint8_t> ok(total, 0);
  auto cast = [&](std::size_t idx) {
    const int ring = static_cast<int>(idx / static_cast<std::size_t>(steps));
    const int j = static_cast<int>(idx % static_cast<std::size_t>(steps));
    const double el = sensor.elevations_deg[static_cast<std::size_t>(ring)] * kPi / 180.0;
    const double az = j * step_angle;
    const Vec3 ds(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
    const Vec3 dw = R * ds;
    double best = -1.0;
    auto test = [&](std::uint32_t k) {
      const double t = prims[k].intersect(pose.p, dw, kTmin);
      if (t > 0.0 && (best < 0.0 || t < best)) best = t;
    };
    for (auto k : always) test(k);
    for (auto k : bins[static_cast<std::size_t>(j)]) test(k);
    if (best < 0.0 || best > sensor.max_range) return;
    double range = best;
    if (sensor.range_noise > 0.0) {
      range += sensor.range_noise * hashed_gaussian(seed, static_cast<std::uint64_t>(ring),
                                                    static_cast<std::uint64_t>(j), 0);
    }
    if (range < sensor.min_range || range > sensor.max_range) return;
    hit[idx] = ds * range;
    ok[idx] = 1;
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic, 256)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(total); ++i) {
      cast(static_cast<std::size_t>(i));
    }
  } else {
    for (std::size_t i = 0; i < total; ++i) cast(i);
  }

  Scan scan;
  scan.cloud.frame = FrameId::Lidar;
  scan.rings.push_back(0);
  for (std::size_t i = 0; i < total; ++i) {
    if (ok[i]) scan.cloud.points.push_back(hit[i]);
    if ((i + 1) % static_cast<std::size_t>(steps) == 0) {
      scan.rings.push_back(static_cast<std::uint32_t>(scan.cloud.points.size()));
    }
  }
  return scan;
}

TrajectoryParams trajectory_preset(TrajectoryKind kind, double size, const Pose& origin,
                                   double speed, double rate) {
  TrajectoryParams p;
  p.origin = origin;
  p.speed = speed;
  p.rate = rate;
  switch (kind) {
    case TrajectoryKind::Loop:
      p.segments = {{2.0 * kPi * size, 2.0 * kPi}};
      break;
    case TrajectoryKind::Corridor:
      p.segments = {{size, 0.0}};
      break;
    case TrajectoryKind::Figure8:
      p.segments = {{2.0 * kPi * size, 2.0 * kPi}, {2.0 * kPi * size, -2.0 * kPi}};
      break;
  }
  return p;
}

Trajectory make_trajectory(const TrajectoryParams& params) {
  if (params.segments.empty() || !(params.speed > 0.0) || !(params.rate > 0.0)) {
    throw Error(ErrorCode::InvalidParameter, "trajectory needs segments, speed and rate");
  }
  struct State {
    double x, y, h, s;
  };
  std::vector<State> starts;
  State st{0.0, 0.0, 0.0, 0.0};
  for (const auto& seg : params.segments) {
    if (!(seg.length > 0.0)) {
      throw Error(ErrorCode::InvalidParameter, "path segment length must be positive");
    }
    starts.push_back(st);
    if (seg.turn == 0.0) {
      st.x += seg.length * std::cos(st.h);
      st.y += seg.length * std::sin(st.h);
    } else {
      const double R = seg.length / seg.turn;
      const double h1 = st.h + seg.turn;
      st.x += R * (std::sin(h1) - std::sin(st.h));
      st.y -= R * (std::cos(h1) - std::cos(st.h));
      st.h = h1;
    }
    st.s += seg.length;
  }
  const double total = st.s;
  const auto n = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::llround(total * params.rate / params.speed)));
  const double ds = total / static_cast<double>(n - 1);

  Trajectory traj;
  traj.reserve(n);
  std::size_t seg = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double s = k + 1 == n ? total : ds * static_cast<double>(k);
    while (seg + 1 < starts.size() && s >= starts[seg + 1].s) ++seg;
    const State& s0 = starts[seg];
    const PathSegment& g = params.segments[seg];
    const double u = s - s0.s;
    State cur = s0;
    if (g.turn == 0.0) {
      cur.x += u * std::cos(s0.h);
      cur.y += u * std::sin(s0.h);
    } else {
      const double R = g.length / g.turn;
      cur.h = s0.h + g.turn * u / g.length;
      cur.x += R * (std::sin(cur.h) - std::sin(s0.h));
      cur.y -= R * (std::cos(cur.h) - std::cos(s0.h));
    }
    const Pose local(Vec3(cur.x, cur.y, 0.0), Quat(Eigen::AngleAxisd(cur.h, Vec3::UnitZ())));
    traj.push_back({params.t0 + static_cast<double>(k) / params.rate, params.origin * local});
  }
  return traj;
}

Trajectory drift_odometry(const Trajectory& truth, const OdomModel& model) {
  Trajectory odom;
  if (truth.empty()) return odom;
  odom.reserve(truth.size());
  odom.push_back({truth.front().t, Pose::identity()});
  for (std::size_t k = 1; k < truth.size(); ++k) {
    const Pose step = inverse(truth[k - 1].pose) * truth[k].pose;
    Vec6 err = model.drift_per_meter * step.p.norm();
    for (int a = 0; a < 6; ++a) {
      if (model.noise_sigma[a] > 0.0) {
        err[a] += model.noise_sigma[a] *
                  hashed_gaussian(model.seed, k, static_cast<std::uint64_t>(a), 1);
      }
    }
    odom.push_back({truth[k].t, odom.back().pose * step * se3_exp(err)});
  }
  return odom;
}

SceneChange SceneChange::remove(std::string tag) {
  SceneChange c;
  c.kind = Kind::Remove;
  c.tag = std::move(tag);
  return c;
}

SceneChange SceneChange::add(Primitive p) {
  SceneChange c;
  c.kind = Kind::Add;
  c.primitive = std::move(p);
  return c;
}

SceneChange SceneChange::move(std::uint32_t id, const Pose& delta) {
  SceneChange c;
  c.kind = Kind::Move;
  c.id = id;
  c.delta = delta;
  return c;
}

World apply_scene_change(const World& world, const SceneChange& change) {
  World out = world;
  switch (change.kind) {
    case SceneChange::Kind::Remove: {
      if (!world.has_tag(change.tag)) {
        throw Error(ErrorCode::InvalidParameter, "no primitive tagged '" + change.tag + "'");
      }
      std::erase_if(out.prims_, [&](const Primitive& p) { return p.tag == change.tag; });
      break;
    }
    case SceneChange::Kind::Add:
      out.add(change.primitive);
      break;
    case SceneChange::Kind::Move: {
      auto it = std::find_if(out.prims_.begin(), out.prims_.end(),
                             [&](const Primitive& p) { return p.id == change.id; });
      if (it == out.prims_.end()) {
        throw Error(ErrorCode::InvalidParameter, "no primitive with id " + std::to_string(change.id));
      }
      it->pose = change.delta * it->pose;
      break;
    }
  }
  return out;
}

}  // namespace roll
