#include "roll/fusion.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>

#include "roll/error.hpp"

namespace roll {

namespace {

// d vec(q Exp(dtheta)) / d dtheta at dtheta = 0.
Mat3 vec_right_jacobian(const Quat& q) { return 0.5 * (q.w() * Mat3::Identity() + skew(q.vec())); }

// d vec(Exp(-dtheta) q) / d dtheta; the relative rotation q_i^-1 q_j seen from node i.
Mat3 vec_left_inv_jacobian(const Quat& q) {
  return -0.5 * (q.w() * Mat3::Identity() - skew(q.vec()));
}

Pose retract(const Pose& x, const Vec6& d) {
  return {x.p + d.head<3>(), x.q * so3_exp_quat(d.tail<3>())};
}

double weighted(const Vec6& r, const Vec6& info) { return r.dot(info.cwiseProduct(r)); }

struct Problem {
  const FusionWindow& w;
  Vec6 info_o, info_m;

  double cost(const std::vector<Pose>& x) const {
    const auto& e = w.entries();
    double c = 0.0;
    for (std::size_t i = 0; i + 1 < e.size(); ++i) {
      c += weighted(fusion_odom_residual(x[i], x[i + 1], e[i].odom, e[i + 1].odom), info_o);
    }
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (e[i].gm) c += weighted(fusion_gm_residual(x[i], *e[i].gm), info_m);
    }
    return c;
  }

  void linearize(const std::vector<Pose>& x, Eigen::SparseMatrix<double>& H,
                 Eigen::VectorXd& b) const {
    const auto& e = w.entries();
    const auto n = static_cast<Eigen::Index>(e.size());
    std::vector<Eigen::Triplet<double>> trip;
    b.setZero(6 * n);
    auto add = [&trip](Eigen::Index bi, Eigen::Index bj, const Mat6& m) {
      for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 6; ++c) trip.emplace_back(6 * bi + r, 6 * bj + c, m(r, c));
    };
    const auto Wo = info_o.asDiagonal();
    const auto Wm = info_m.asDiagonal();
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      Mat6 Ji, Jj;
      const Vec6 r = fusion_odom_residual(x[i], x[i + 1], e[i].odom, e[i + 1].odom, &Ji, &Jj);
      add(i, i, Ji.transpose() * Wo * Ji);
      add(i, i + 1, Ji.transpose() * Wo * Jj);
      add(i + 1, i, Jj.transpose() * Wo * Ji);
      add(i + 1, i + 1, Jj.transpose() * Wo * Jj);
      b.segment<6>(6 * i) += Ji.transpose() * (Wo * r);
      b.segment<6>(6 * (i + 1)) += Jj.transpose() * (Wo * r);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!e[i].gm) continue;
      Mat6 J;
      const Vec6 r = fusion_gm_residual(x[i], *e[i].gm, &J);
      add(i, i, J.transpose() * Wm * J);
      b.segment<6>(6 * i) += J.transpose() * (Wm * r);
    }
    H.resize(6 * n, 6 * n);
    H.setFromTriplets(trip.begin(), trip.end());
  }
};

}  // namespace

Pose publish_pose(const Drift& drift, const Pose& odom) { return compose(drift.T, odom); }

FusionWindow::FusionWindow(std::size_t n_t) : cap_(n_t) {
  if (n_t < 2) {
    throw Error(ErrorCode::InvalidParameter, "fusion window needs n_t >= 2");
  }
}

void FusionWindow::push_odom(double t, const Pose& odom) {
  if (!entries_.empty() && !(t > entries_.back().t)) {
    throw Error(ErrorCode::InvalidParameter, "odometry timestamps must increase");
  }
  entries_.push_back({t, odom, std::nullopt});
  while (entries_.size() > cap_) entries_.pop_front();
}

void FusionWindow::add_gm(double t, const Pose& gm) {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->t == t) {
      it->gm = gm;
      return;
    }
    if (it->t < t) break;
  }
  throw Error(ErrorCode::InvalidParameter, "gm timestamp has no odometry pose");
}

std::size_t FusionWindow::gm_count() const {
  return static_cast<std::size_t>(
      std::count_if(entries_.begin(), entries_.end(), [](const auto& e) { return e.gm.has_value(); }));
}

Vec6 fusion_odom_residual(const Pose& x_i, const Pose& x_j, const Pose& odom_i,
                          const Pose& odom_j, Mat6* J_i, Mat6* J_j) {
  const Mat3 Ri_t = x_i.rotation().transpose();
  const Vec3 d = x_j.p - x_i.p;
  const Pose est(Ri_t * d, x_i.q.conjugate() * x_j.q);
  const Pose meas(odom_i.q.conjugate() * (odom_j.p - odom_i.p), odom_i.q.conjugate() * odom_j.q);
  const Vec6 r = ominus(est, meas);
  if (J_i != nullptr) {
    J_i->setZero();
    J_i->block<3, 3>(0, 0) = -Ri_t;
    J_i->block<3, 3>(0, 3) = skew(Ri_t * d);
    J_i->block<3, 3>(3, 3) = vec_left_inv_jacobian(est.q);
  }
  if (J_j != nullptr) {
    J_j->setZero();
    J_j->block<3, 3>(0, 0) = Ri_t;
    J_j->block<3, 3>(3, 3) = vec_right_jacobian(est.q);
  }
  return r;
}

Vec6 fusion_gm_residual(const Pose& x, const Pose& gm, Mat6* J) {
  const Vec6 r = ominus(x, gm);
  if (J != nullptr) {
    J->setZero();
    J->block<3, 3>(0, 0).setIdentity();
    J->block<3, 3>(3, 3) = vec_right_jacobian(x.q);
  }
  return r;
}

WindowSolution window_optimize(const FusionWindow& w, const Pose& current_drift,
                               const FusionCovariances& cov, const FusionSolveOptions& opts) {
  const auto& e = w.entries();
  if (e.size() < 2) {
    throw Error(ErrorCode::InvalidParameter, "fusion window needs two odometry poses");
  }
  if (w.gm_count() == 0) {
    throw Error(ErrorCode::NoAnchor, "no global matching pose in window");
  }
  const Problem prob{w, cov.odom.cwiseInverse(), cov.gm.cwiseInverse()};
  std::vector<Pose> x;
  x.reserve(e.size());
  for (const auto& entry : e) x.push_back(compose(current_drift, entry.odom));

  WindowSolution sol;
  double cost = prob.cost(x);
  double lambda = opts.lambda0;
  Eigen::SparseMatrix<double> H;
  Eigen::VectorXd b;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  for (int it = 0; it < opts.max_iters; ++it) {
    prob.linearize(x, H, b);
    sol.iterations = it + 1;
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
        throw Error(ErrorCode::NumericalFailure, "non-finite fusion step");
      }
      std::vector<Pose> cand(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) {
        cand[i] = retract(x[i], delta.segment<6>(static_cast<Eigen::Index>(6 * i)));
      }
      const double c = prob.cost(cand);
      if (!std::isfinite(c)) {
        throw Error(ErrorCode::NumericalFailure, "non-finite fusion cost");
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
    if (!accepted || decrease < opts.min_decrease) break;
  }
  for (const auto& p : x) {
    if (!is_finite(p)) throw Error(ErrorCode::NumericalFailure, "non-finite fusion node");
  }
  sol.cost = cost;
  sol.first_drift = compose(x.front(), inverse(e.front().odom));
  sol.last_drift = compose(x.back(), inverse(e.back().odom));
  sol.candidate = {sol.last_drift, e.back().t, Drift::Source::Optimized};
  sol.nodes = std::move(x);
  return sol;
}

Decision consistency_check(const Pose& first_drift, const Pose& last_drift, double p_t) {
  const Pose delta = compose(inverse(first_drift), last_drift);
  return delta.p.norm() <= p_t ? Decision::Accept : Decision::Reject;
}

Drift apply_decision(Decision d, const Drift& candidate, const Pose& latest_gm,
                     const Pose& latest_odom, double t) {
  if (d == Decision::Accept) {
    return candidate;
  }
  return {compose(latest_gm, inverse(latest_odom)), t, Drift::Source::Reset};
}

FusionEngine::FusionEngine(const FusionParams& params, const Pose& initial_drift)
    : params_(params), window_(params.n_t), drift_{initial_drift, 0.0, Drift::Source::Initial} {}

void FusionEngine::push_odom(double t, const Pose& odom) { window_.push_odom(t, odom); }

FusionUpdate FusionEngine::push_gm(double t, const Pose& gm) {
  window_.add_gm(t, gm);
  FusionUpdate up;
  up.drift = drift_;
  if (window_.size() < 2) {
    return up;
  }
  WindowSolution sol;
  try {
    sol = window_optimize(window_, drift_.T, params_.cov, params_.solve);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NumericalFailure) return up;
    throw;
  }
  up.solved = true;
  up.decision = params_.consistency_check
                    ? consistency_check(sol.first_drift, sol.last_drift, params_.p_t)
                    : Decision::Accept;
  if (up.decision == Decision::Reject) ++rejects_;
  drift_ = apply_decision(up.decision, sol.candidate, gm, window_.entries().back().odom, t);
  up.drift = drift_;
  return up;
}

FusionWorker::FusionWorker(const FusionParams& params, const Pose& initial_drift)
    : engine_(params, initial_drift), snapshot_(engine_.drift()) {
  thread_ = std::thread([this] { run(); });
}

FusionWorker::~FusionWorker() {
  {
    std::lock_guard lock(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  thread_.join();
}

void FusionWorker::push_odom(double t, const Pose& odom) {
  {
    std::lock_guard lock(mu_);
    queue_.push_back({false, t, odom});
  }
  cv_.notify_one();
}

void FusionWorker::push_gm(double t, const Pose& gm) {
  {
    std::lock_guard lock(mu_);
    queue_.push_back({true, t, gm});
  }
  cv_.notify_one();
}

Drift FusionWorker::snapshot() const {
  std::lock_guard lock(mu_);
  return snapshot_;
}

std::size_t FusionWorker::reject_count() const {
  std::lock_guard lock(mu_);
  return rejects_;
}

void FusionWorker::flush() {
  std::unique_lock lock(mu_);
  idle_cv_.wait(lock, [this] { return queue_.empty() && !busy_; });
}

void FusionWorker::run() {
  for (;;) {
    Message m;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [this] { return stop_ || !queue_.empty(); });
      if (queue_.empty()) return;
      m = queue_.front();
      queue_.pop_front();
      busy_ = true;
    }
    try {
      if (m.is_gm) {
        engine_.push_gm(m.t, m.pose);
      } else {
        engine_.push_odom(m.t, m.pose);
      }
    } catch (const Error&) {
      // a malformed measurement is dropped; the drift stays as it was
    }
    {
      std::lock_guard lock(mu_);
      snapshot_ = engine_.drift();
      rejects_ = engine_.reject_count();
      busy_ = false;
    }
    idle_cv_.notify_all();
  }
}

}  // namespace roll
