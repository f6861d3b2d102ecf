#include "roll/matching.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

#include "roll/error.hpp"

namespace roll {

namespace {

constexpr double kDegenerate = 1e-9;
constexpr std::size_t kChunk = 256;

// d(T x)/d(delta) for the left perturbation.
Mat36 point_jacobian(const Vec3& w) {
  Mat36 J;
  J.leftCols<3>().setIdentity();
  J.rightCols<3>() = -skew(w);
  return J;
}

Vec3 plane_normal(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 n = (b - a).cross(c - a);
  const double len = n.norm();
  if (!(len > kDegenerate)) {
    throw Error(ErrorCode::DegenerateCorrespondence, "collinear plane points");
  }
  return n / len;
}

void require_line(const Vec3& a, const Vec3& b) {
  if (!((a - b).norm() > kDegenerate)) {
    throw Error(ErrorCode::DegenerateCorrespondence, "coincident line points");
  }
}

void add_edge(NormalEquations& ne, const Correspondence& c, const Pose& T) {
  Mat36 J;
  const Vec3 e = line_offset(T, c.point, c.map_points[0], c.map_points[1], &J);
  ne.H.noalias() += J.transpose() * J;
  ne.g.noalias() += J.transpose() * e;
  ne.cost += e.squaredNorm();
}

void add_surf(NormalEquations& ne, const Correspondence& c, const Pose& T) {
  Row6 J;
  const double r = plane_residual(T, c.point, c.map_points[0], c.map_points[1], c.map_points[2], &J);
  ne.H.noalias() += J.transpose() * J;
  ne.g.noalias() += J.transpose() * r;
  ne.cost += r * r;
}

template <class Body>
void for_each_index(std::size_t n, Exec exec, Body&& body) {
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
      body(static_cast<std::size_t>(i));
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      body(i);
    }
  }
}

Correspondence make_correspondence(const Vec3& x, const Pose& T, const SpatialIndex& index,
                                   Correspondence::Kind kind, const AssociationGate& gate) {
  Correspondence c;
  c.point = x;
  c.kind = kind;
  const Vec3 w = T.apply(x);
  const std::size_t k = kind == Correspondence::Kind::EdgeLine ? 2 : 3;
  const std::size_t want = k + static_cast<std::size_t>(std::max(gate.check_neighbors, 0));
  Neighbor nb[8];
  const std::size_t found = index.knn(w, std::min<std::size_t>(want, 8), std::span<Neighbor>(nb, 8));
  c.nn_dist = nb[0].distance();
  c.near = c.nn_dist <= gate.max_corr_dist;
  if (found < k) {
    return c;
  }
  for (std::size_t i = 0; i < k; ++i) {
    c.map_points[i] = index.point(nb[i].index);
  }
  const Vec3& a = c.map_points[0];
  if (kind == Correspondence::Kind::EdgeLine) {
    const Vec3 ab = c.map_points[1] - a;
    c.defined = ab.norm() > kDegenerate;
    if (!c.defined) return c;
    const Vec3 d = ab.normalized();
    c.consistent = true;
    for (std::size_t i = k; i < found; ++i) {
      const Vec3 q = index.point(nb[i].index) - a;
      if ((q - q.dot(d) * d).norm() > gate.line_check_tol) c.consistent = false;
    }
  } else {
    const Vec3 u = c.map_points[1] - a;
    const Vec3 v = c.map_points[2] - a;
    const Vec3 n = u.cross(v);
    const double area = n.norm();
    c.defined = area > kDegenerate && area >= gate.plane_min_sine * u.norm() * v.norm();
    if (!c.defined) return c;
    c.consistent = true;
    for (std::size_t i = k; i < found; ++i) {
      if (std::abs((index.point(nb[i].index) - a).dot(n) / area) > gate.plane_check_tol) {
        c.consistent = false;
      }
    }
  }
  c.valid = c.consistent && c.near &&
            (!gate.compact || nb[found - 1].distance() <= gate.max_corr_dist);
  if (c.valid && gate.max_residual > 0.0) {
    const double r = kind == Correspondence::Kind::EdgeLine
                         ? point_to_line(w, c.map_points[0], c.map_points[1])
                         : point_to_plane(w, c.map_points[0], c.map_points[1], c.map_points[2]);
    c.valid = r <= gate.max_residual;
  }
  return c;
}

}  // namespace

double point_to_line(const Vec3& p, const Vec3& a, const Vec3& b) {
  require_line(a, b);
  return (p - a).cross(p - b).norm() / (a - b).norm();
}

double point_to_plane(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  return std::abs((p - a).dot(plane_normal(a, b, c)));
}

double line_residual(const Pose& T, const Vec3& x, const Vec3& a, const Vec3& b, Row6* J) {
  require_line(a, b);
  const Vec3 w = T.apply(x);
  const Vec3 ab = a - b;
  const double len = ab.norm();
  const Vec3 u = (w - a).cross(w - b);
  const double un = u.norm();
  if (J != nullptr) {
    if (un > 0.0) {
      *J = (u / un).transpose() * (-skew(ab)) / len * point_jacobian(w);
    } else {
      J->setZero();
    }
  }
  return un / len;
}

Vec3 line_offset(const Pose& T, const Vec3& x, const Vec3& a, const Vec3& b, Mat36* J) {
  require_line(a, b);
  const Vec3 w = T.apply(x);
  const Vec3 d = (b - a).normalized();
  const Mat3 P = Mat3::Identity() - d * d.transpose();
  if (J != nullptr) {
    *J = P * point_jacobian(w);
  }
  return P * (w - a);
}

double plane_residual(const Pose& T, const Vec3& x, const Vec3& a, const Vec3& b, const Vec3& c,
                      Row6* J) {
  const Vec3 n = plane_normal(a, b, c);
  const Vec3 w = T.apply(x);
  if (J != nullptr) {
    *J = n.transpose() * point_jacobian(w);
  }
  return n.dot(w - a);
}

std::vector<Correspondence> associate(const FeatureFrame& frame, const Pose& guess,
                                      const LocalMap& local, const AssociationGate& gate,
                                      Exec exec) {
  const auto& edges = frame.edges.points;
  const auto& surfs = frame.surfaces.points;
  const std::size_t ne = local.edge_index.empty() ? 0 : edges.size();
  const std::size_t ns = local.surf_index.empty() ? 0 : surfs.size();
  std::vector<Correspondence> out(ne + ns);
  for_each_index(ne + ns, exec, [&](std::size_t i) {
    out[i] = i < ne ? make_correspondence(edges[i], guess, local.edge_index,
                                          Correspondence::Kind::EdgeLine, gate)
                    : make_correspondence(surfs[i - ne], guess, local.surf_index,
                                          Correspondence::Kind::SurfPlane, gate);
  });
  return out;
}

NormalEquations accumulate_normal_equations(std::span<const Correspondence> corrs, const Pose& T,
                                            Exec exec) {
  const std::size_t chunks = (corrs.size() + kChunk - 1) / kChunk;
  std::vector<NormalEquations> partial(chunks);
  for_each_index(chunks, exec, [&](std::size_t k) {
    NormalEquations& ne = partial[k];
    const std::size_t end = std::min(corrs.size(), (k + 1) * kChunk);
    for (std::size_t i = k * kChunk; i < end; ++i) {
      const Correspondence& c = corrs[i];
      if (!c.valid) continue;
      if (c.kind == Correspondence::Kind::EdgeLine) {
        add_edge(ne, c, T);
      } else {
        add_surf(ne, c, T);
      }
      ++ne.count;
    }
  });
  NormalEquations total;
  for (const auto& ne : partial) {
    total.H += ne.H;
    total.g += ne.g;
    total.cost += ne.cost;
    total.count += ne.count;
  }
  return total;
}

double correspondence_cost(std::span<const Correspondence> corrs, const Pose& T, Exec exec) {
  const std::size_t chunks = (corrs.size() + kChunk - 1) / kChunk;
  std::vector<double> partial(chunks, 0.0);
  for_each_index(chunks, exec, [&](std::size_t k) {
    double s = 0.0;
    const std::size_t end = std::min(corrs.size(), (k + 1) * kChunk);
    for (std::size_t i = k * kChunk; i < end; ++i) {
      const Correspondence& c = corrs[i];
      if (!c.valid) continue;
      if (c.kind == Correspondence::Kind::EdgeLine) {
        s += line_offset(T, c.point, c.map_points[0], c.map_points[1]).squaredNorm();
      } else {
        const double r =
            plane_residual(T, c.point, c.map_points[0], c.map_points[1], c.map_points[2]);
        s += r * r;
      }
    }
    partial[k] = s;
  });
  double total = 0.0;
  for (double s : partial) total += s;
  return total;
}

std::vector<double> stacked_residuals(std::span<const Correspondence> corrs, const Pose& T) {
  std::vector<double> res;
  res.reserve(corrs.size());
  for (const auto& c : corrs) {
    if (!c.defined || !c.near) {
      res.push_back(c.nn_dist);
    } else if (c.kind == Correspondence::Kind::EdgeLine) {
      res.push_back(point_to_line(T.apply(c.point), c.map_points[0], c.map_points[1]));
    } else {
      res.push_back(
          point_to_plane(T.apply(c.point), c.map_points[0], c.map_points[1], c.map_points[2]));
    }
  }
  return res;
}

MatchResult optimize(const FeatureFrame& frame, const Pose& guess, const LocalMap& local,
                     const MatchOptions& opts) {
  if (!is_finite(guess)) {
    throw Error(ErrorCode::InvalidParameter, "non-finite pose guess");
  }
  MatchResult result;
  Pose pose = guess;
  double lambda = opts.lambda0;
  // Steps are solved about the sensor position so the eigen-analysis does not
  // depend on the distance to the map origin; dw = rho_c + phi x (w - c).
  Mat6 P = Mat6::Identity();

  for (int it = 0; it < opts.max_iters; ++it) {
    const auto corrs = associate(frame, pose, local, opts.gate, opts.exec);
    const NormalEquations ne = accumulate_normal_equations(corrs, pose, opts.exec);
    if (ne.count < opts.min_correspondences) {
      throw Error(ErrorCode::InsufficientCorrespondences,
                  std::to_string(ne.count) + " valid correspondences");
    }
    Mat6 C = Mat6::Identity();
    C.topRightCorner<3, 3>() = skew(pose.p);
    const Mat6 Hc = C.transpose() * ne.H * C;
    const Vec6 gc = C.transpose() * ne.g;
    if (it == 0 && opts.degeneracy_eig > 0.0) {
      // LOAM degeneracy handling: updates along weakly constrained
      // eigen-directions are projected out for the whole solve.
      const Eigen::SelfAdjointEigenSolver<Mat6> es(Hc);
      Vec6 keep = (es.eigenvalues().array() >= opts.degeneracy_eig).cast<double>();
      P = es.eigenvectors() * keep.asDiagonal() * es.eigenvectors().transpose();
      result.degenerate_dims = 6 - static_cast<int>(keep.sum());
    }
    result.iterations = it + 1;
    bool stepped = false;
    bool small = false;
    while (lambda < 1e10) {
      Mat6 A = Hc;
      A.diagonal().array() += lambda;
      const Vec6 dc = P * A.ldlt().solve(-gc);
      const Vec6 delta = C * dc;
      if (!delta.allFinite()) {
        throw Error(ErrorCode::NumericalFailure, "non-finite matching step");
      }
      small = dc.head<3>().norm() < opts.trans_tol && dc.tail<3>().norm() < opts.rot_tol;
      const Pose candidate = se3_exp(delta) * pose;
      if (correspondence_cost(corrs, candidate, opts.exec) <= ne.cost) {
        pose = candidate;
        lambda = std::max(lambda / 10.0, 1e-12);
        stepped = true;
        break;
      }
      if (small) break;
      lambda *= 10.0;
    }
    if (small || !stepped) {
      result.converged = true;
      break;
    }
  }

  const auto final_corrs = associate(frame, pose, local, opts.gate, opts.exec);
  result.pose = pose;
  result.residuals = stacked_residuals(final_corrs, pose);
  result.assoc_count = result.residuals.size();
  result.valid_count = static_cast<std::size_t>(
      std::count_if(final_corrs.begin(), final_corrs.end(), [](const auto& c) { return c.valid; }));
  result.inlier_ratio = inlier_ratio(result.residuals, opts.d_t);
  return result;
}

double inlier_ratio(std::span<const double> residuals, double d_t) {
  if (residuals.empty()) {
    return 0.0;
  }
  const auto inliers =
      std::count_if(residuals.begin(), residuals.end(), [d_t](double r) { return r < d_t; });
  return static_cast<double>(inliers) / static_cast<double>(residuals.size());
}

Pose predict_pose(const Pose& drift, const Pose& odom_pose) { return compose(drift, odom_pose); }

}  // namespace roll
