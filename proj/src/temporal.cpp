#include "roll/temporal.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <cmath>

#include "roll/error.hpp"

namespace roll {

namespace {

Vec6 info(const Vec6& cov) { return cov.cwiseInverse(); }

void add_block(std::vector<Eigen::Triplet<double>>& trip, std::size_t bi, std::size_t bj,
               const Mat6& m) {
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) {
      trip.emplace_back(static_cast<int>(6 * bi) + r, static_cast<int>(6 * bj) + c, m(r, c));
    }
  }
}

void validate(const PoseGraph& g) {
  const std::size_t n = g.nodes.size();
  if (n == 0 || g.unary.empty()) {
    throw Error(ErrorCode::InvalidParameter, "pose graph needs nodes and a unary factor");
  }
  for (const auto& f : g.odom) {
    if (f.i >= n || f.j >= n || f.i == f.j || !(f.cov.array() > 0.0).all()) {
      throw Error(ErrorCode::InvalidParameter, "malformed odometry factor");
    }
  }
  for (const auto& f : g.unary) {
    if (f.i >= n || !(f.cov.array() > 0.0).all()) {
      throw Error(ErrorCode::InvalidParameter, "malformed unary factor");
    }
  }
}

double cost_of(const PoseGraph& g, const std::vector<Pose>& x) {
  double c = 0.0;
  for (const auto& f : g.odom) {
    const Vec6 r = odom_residual(x[f.i], x[f.j], f.meas);
    c += r.dot(info(f.cov).cwiseProduct(r));
  }
  for (const auto& f : g.unary) {
    const Vec6 r = unary_residual(x[f.i], f.meas);
    c += r.dot(info(f.cov).cwiseProduct(r));
  }
  return c;
}

void linearize(const PoseGraph& g, const std::vector<Pose>& x, Eigen::SparseMatrix<double>& H,
               Eigen::VectorXd& b) {
  const std::size_t n = x.size();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(36 * (4 * g.odom.size() + g.unary.size()));
  b.setZero(static_cast<Eigen::Index>(6 * n));
  for (const auto& f : g.odom) {
    Mat6 Ji, Jj;
    const Vec6 r = odom_residual(x[f.i], x[f.j], f.meas, &Ji, &Jj);
    const Vec6 w = info(f.cov);
    const auto W = w.asDiagonal();
    add_block(trip, f.i, f.i, Ji.transpose() * W * Ji);
    add_block(trip, f.i, f.j, Ji.transpose() * W * Jj);
    add_block(trip, f.j, f.i, Jj.transpose() * W * Ji);
    add_block(trip, f.j, f.j, Jj.transpose() * W * Jj);
    b.segment<6>(static_cast<Eigen::Index>(6 * f.i)) += Ji.transpose() * (W * r);
    b.segment<6>(static_cast<Eigen::Index>(6 * f.j)) += Jj.transpose() * (W * r);
  }
  for (const auto& f : g.unary) {
    Mat6 J;
    const Vec6 r = unary_residual(x[f.i], f.meas, &J);
    const Vec6 w = info(f.cov);
    const auto W = w.asDiagonal();
    add_block(trip, f.i, f.i, J.transpose() * W * J);
    b.segment<6>(static_cast<Eigen::Index>(6 * f.i)) += J.transpose() * (W * r);
  }
  H.resize(static_cast<Eigen::Index>(6 * n), static_cast<Eigen::Index>(6 * n));
  H.setFromTriplets(trip.begin(), trip.end());
}

}  // namespace

std::pair<AnomalyState, AnomalyEvent> anomaly_step(const AnomalyState& state, double mu,
                                                   std::size_t index) {
  if (!(state.mu_M > state.mu_E) || !(mu >= 0.0 && mu <= 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "anomaly thresholds or ratio out of range");
  }
  AnomalyState next = state;
  if (state.mode == Mode::Normal && mu < state.mu_E) {
    next.mode = Mode::TemporaryMapping;
    next.entry_index = index;
    return {next, AnomalyEvent::EnterTM};
  }
  if (state.mode == Mode::TemporaryMapping && mu > state.mu_M) {
    next.mode = Mode::Normal;
    return {next, AnomalyEvent::ExitTM};
  }
  return {next, AnomalyEvent::None};
}

Vec6 odom_residual(const Pose& x_i, const Pose& x_j, const Pose& meas, Mat6* J_i, Mat6* J_j) {
  const Vec6 r = se3_log(inverse(meas) * inverse(x_i) * x_j);
  if (J_i != nullptr || J_j != nullptr) {
    const Mat6 Jr_inv = se3_right_jacobian_inv(r);
    if (J_j != nullptr) *J_j = Jr_inv;
    if (J_i != nullptr) *J_i = -Jr_inv * se3_adjoint(inverse(x_j) * x_i);
  }
  return r;
}

Vec6 unary_residual(const Pose& x_i, const Pose& meas, Mat6* J) {
  const Vec6 r = se3_log(inverse(meas) * x_i);
  if (J != nullptr) *J = se3_right_jacobian_inv(r);
  return r;
}

double graph_cost(const PoseGraph& g) { return cost_of(g, g.nodes); }

GraphResult optimize_graph(const PoseGraph& g, const GraphOptions& opts) {
  validate(g);
  GraphResult res;
  std::vector<Pose> x = g.nodes;
  double cost = cost_of(g, x);
  if (!std::isfinite(cost)) {
    throw Error(ErrorCode::NumericalFailure, "non-finite initial graph cost");
  }
  res.initial_cost = cost;
  double lambda = opts.lambda0;
  Eigen::SparseMatrix<double> H;
  Eigen::VectorXd b;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;

  for (int it = 0; it < opts.max_iters; ++it) {
    linearize(g, x, H, b);
    res.iterations = it + 1;
    bool accepted = false;
    double decrease = 0.0;
    while (lambda < 1e12) {
      Eigen::SparseMatrix<double> A = H;
      for (Eigen::Index k = 0; k < A.rows(); ++k) A.coeffRef(k, k) += lambda;
      solver.compute(A);
      if (solver.info() != Eigen::Success) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd delta = solver.solve(-b);
      if (!delta.allFinite()) {
        throw Error(ErrorCode::NumericalFailure, "non-finite graph step");
      }
      std::vector<Pose> cand = x;
      for (std::size_t i = 0; i < x.size(); ++i) {
        cand[i] = x[i] * se3_exp(delta.segment<6>(static_cast<Eigen::Index>(6 * i)));
      }
      const double c = cost_of(g, cand);
      if (!std::isfinite(c)) {
        throw Error(ErrorCode::NumericalFailure, "non-finite graph cost");
      }
      if (c <= cost) {
        decrease = cost - c;
        x = std::move(cand);
        cost = c;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted || decrease < opts.min_decrease) {
      break;
    }
  }
  linearize(g, x, H, b);
  res.nodes = std::move(x);
  res.final_cost = cost;
  res.gradient_norm = 2.0 * b.norm();
  return res;
}

void TempBuffer::push_window(TempFrame f) {
  frames_.push_back(std::move(f));
  while (frames_.size() > cap_) {
    frames_.erase(frames_.begin());
  }
}

void TempBuffer::push_tm(TempFrame f) { frames_.push_back(std::move(f)); }

TmCloseResult close_tm_session(const TempBuffer& buf, const Pose& exit_gm_pose,
                               const TemporalCovariances& cov, const GraphOptions& opts) {
  TmCloseResult out;
  const auto& frames = buf.frames();
  if (frames.empty()) {
    return out;
  }
  if (frames.size() < 2) {
    Keyframe kf = frames.front().keyframe;
    kf.obs_pose = exit_gm_pose;
    out.keyframes.push_back(std::move(kf));
    return out;
  }

  const std::size_t n = frames.size();
  std::size_t anchor = 0;
  while (anchor + 1 < n && !frames[anchor].gm_pose) ++anchor;
  PoseGraph& g = out.graph;
  g.nodes.resize(n);
  if (anchor + 1 < n) {
    const Pose& gm = *frames[anchor].gm_pose;
    const Pose base = gm * inverse(frames[anchor].odom_pose);
    for (std::size_t i = 0; i < n; ++i) g.nodes[i] = base * frames[i].odom_pose;
    g.unary.push_back({anchor, gm, cov.gm});
  } else {
    // no reliable pre-anomaly pose: propagate backwards from the exit anchor
    const Pose base = exit_gm_pose * inverse(frames.back().odom_pose);
    for (std::size_t i = 0; i < n; ++i) g.nodes[i] = base * frames[i].odom_pose;
  }
  g.unary.push_back({n - 1, exit_gm_pose, cov.gm});
  for (std::size_t i = 0; i + 1 < n; ++i) {
    g.odom.push_back(
        {i, i + 1, inverse(frames[i].odom_pose) * frames[i + 1].odom_pose, cov.odom});
  }
  out.solution = optimize_graph(g, opts);
  for (std::size_t i = 0; i < n; ++i) {
    Keyframe kf = frames[i].keyframe;
    kf.obs_pose = out.solution.nodes[i];
    out.keyframes.push_back(std::move(kf));
  }
  return out;
}

}  // namespace roll
