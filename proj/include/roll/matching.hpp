#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "roll/exec.hpp"
#include "roll/features.hpp"
#include "roll/keymap.hpp"

namespace roll {

using Row6 = Eigen::Matrix<double, 1, 6>;
using Mat36 = Eigen::Matrix<double, 3, 6>;

/// Distance from p to the line through a and b.
/// Throws DegenerateCorrespondence when |a - b| <= 1e-9.
double point_to_line(const Vec3& p, const Vec3& a, const Vec3& b);
/// Distance from p to the plane through a, b, c.
/// Throws DegenerateCorrespondence for a collinear triple.
double point_to_plane(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

// Residuals of a lidar-frame point x under map pose T, with Jacobians taken
// with respect to a left perturbation T <- Exp(delta) * T, delta = (rho, phi).
double line_residual(const Pose& T, const Vec3& x, const Vec3& a, const Vec3& b, Row6* J = nullptr);
/// Perpendicular offset vector from the line; its norm is line_residual.
Vec3 line_offset(const Pose& T, const Vec3& x, const Vec3& a, const Vec3& b, Mat36* J = nullptr);
/// Signed distance along the unit normal of abc; its magnitude is point_to_plane.
double plane_residual(const Pose& T, const Vec3& x, const Vec3& a, const Vec3& b, const Vec3& c,
                      Row6* J = nullptr);

struct Correspondence {
  enum class Kind : std::uint8_t { EdgeLine, SurfPlane };
  Vec3 point = Vec3::Zero();  // lidar frame
  Kind kind = Kind::EdgeLine;
  std::array<Vec3, 3> map_points{};  // two used for EdgeLine, three for SurfPlane
  double nn_dist = 0.0;              // distance to the closest map point
  bool defined = false;     // line or plane geometry is well conditioned
  bool consistent = false;  // defined and the extra neighbours agree with it
  bool near = false;        // closest map point within the association gate
  bool valid = false;       // consistent, near and compact
};

struct AssociationGate {
  double max_corr_dist = 1.0;  // applied to the nearest neighbour
  // Minimum sine of the triangle angle at the closest plane point; rejects
  // near-collinear triples whose normal is ill-defined.
  double plane_min_sine = 0.2;
  // Extra neighbours fetched only to validate the raw line or plane; each
  // must lie within the tolerance of it. The residual still uses the 2 or 3
  // nearest points.
  int check_neighbors = 2;
  double line_check_tol = 0.1;
  double plane_check_tol = 0.05;
  // Every fetched neighbour, not only the nearest, must lie within the gate.
  bool compact = true;
  // Correspondences whose line/plane residual exceeds this are not used.
  double max_residual = 0.5;
};

/// Edge points first (2-NN in P_k), then surface points (3-NN in Q_k), in
/// frame order. Points whose target map is empty are skipped.
std::vector<Correspondence> associate(const FeatureFrame& frame, const Pose& guess,
                                      const LocalMap& local, const AssociationGate& gate = {},
                                      Exec exec = Exec::Parallel);

struct MatchOptions {
  int max_iters = 10;
  double d_t = 1.0;
  std::size_t min_correspondences = 50;
  double lambda0 = 1e-4;
  double trans_tol = 1e-4;
  double rot_tol = 1e-4;
  // Eigenvalue floor of the sensor-centred normal matrix; directions below it
  // are not updated. Zero disables the check.
  double degeneracy_eig = 10.0;
  AssociationGate gate;
  Exec exec = Exec::Parallel;
};

struct MatchResult {
  Pose pose;
  std::vector<double> residuals;  // one per feature point at the final pose
  double inlier_ratio = 0.0;
  int iterations = 0;
  bool converged = false;
  std::size_t assoc_count = 0;
  std::size_t valid_count = 0;
  int degenerate_dims = 0;
};

/// Normal equations of the damped Gauss-Newton step for fixed correspondences.
struct NormalEquations {
  Mat6 H = Mat6::Zero();
  Vec6 g = Vec6::Zero();
  double cost = 0.0;
  std::size_t count = 0;
};

/// Accumulated in fixed-size chunks summed in order, so the result does not
/// depend on the thread count.
NormalEquations accumulate_normal_equations(std::span<const Correspondence> corrs, const Pose& T,
                                            Exec exec = Exec::Parallel);
double correspondence_cost(std::span<const Correspondence> corrs, const Pose& T,
                           Exec exec = Exec::Parallel);

/// Per-point residuals at T: the line/plane distance for points inside the
/// gate with defined geometry, the nearest-neighbour distance otherwise.
std::vector<double> stacked_residuals(std::span<const Correspondence> corrs, const Pose& T);

/// Throws InsufficientCorrespondences when fewer than min_correspondences
/// are valid, NumericalFailure on a non-finite solve.
MatchResult optimize(const FeatureFrame& frame, const Pose& guess, const LocalMap& local,
                     const MatchOptions& opts = {});

/// Fraction strictly below d_t; 0 for an empty vector.
double inlier_ratio(std::span<const double> residuals, double d_t);

/// Constant-velocity guess drift * odom,, also the direct-transform output.
Pose predict_pose(const Pose& drift, const Pose& odom_pose);

}  // namespace roll
