#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "roll/se3.hpp"

namespace roll {

struct Drift {
  enum class Source : std::uint8_t { Initial, Optimized, Reset };
  Pose T;  // T^M_O
  double last_update_t = 0.0;
  Source source = Source::Initial;
};

/// Map-frame pose drift.T * odom.
Pose publish_pose(const Drift& drift, const Pose& odom);

struct WindowEntry {
  double t = 0.0;
  Pose odom;
  std::optional<Pose> gm;
};

/// Odometry queue of at most n_t poses with gm poses attached at matching
/// timestamps.
class FusionWindow {
 public:
  explicit FusionWindow(std::size_t n_t = 100);

  /// Timestamps must increase strictly; the oldest entry is dropped past n_t.
  void push_odom(double t, const Pose& odom);
  /// Throws InvalidParameter if no odometry entry has timestamp t.
  void add_gm(double t, const Pose& gm);

  const std::deque<WindowEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t gm_count() const;
  std::size_t capacity() const { return cap_; }

 private:
  std::size_t cap_;
  std::deque<WindowEntry> entries_;
};

struct FusionCovariances {
  Vec6 odom = (Vec6() << 0.01, 0.01, 0.01, 1e-4, 1e-4, 1e-4).finished();
  Vec6 gm = (Vec6() << 0.04, 0.04, 0.04, 4e-4, 4e-4, 4e-4).finished();
};

struct FusionSolveOptions {
  int max_iters = 20;
  double min_decrease = 1e-10;
  double lambda0 = 1e-4;
};

struct WindowSolution {
  std::vector<Pose> nodes;   // aligned with the window entries
  Drift candidate;           // from the newest node
  Pose first_drift;          // from the oldest node
  Pose last_drift;           // same transform as candidate.T
  double cost = 0.0;
  int iterations = 0;
};

/// Odometry residual between consecutive nodes: frame-relative
/// translation and imaginary-part rotation differences, estimate minus
/// measurement. Jacobians for p <- p + dp, q <- q Exp(dtheta), ordered (dp, dtheta).
Vec6 fusion_odom_residual(const Pose& x_i, const Pose& x_j, const Pose& odom_i,
                          const Pose& odom_j, Mat6* J_i = nullptr, Mat6* J_j = nullptr);
/// Direct pose difference ominus(x, gm).
Vec6 fusion_gm_residual(const Pose& x, const Pose& gm, Mat6* J = nullptr);

/// Window solve, nodes initialized from current_drift * odom.
/// Throws NoAnchor without gm poses, InvalidParameter with fewer than two
/// odometry poses, NumericalFailure on a non-finite solve.
WindowSolution window_optimize(const FusionWindow& w, const Pose& current_drift,
                               const FusionCovariances& cov = {},
                               const FusionSolveOptions& opts = {});

enum class Decision : std::uint8_t { Accept, Reject };

/// Accept iff |position of first^-1 * last| <= p_t.
Decision consistency_check(const Pose& first_drift, const Pose& last_drift, double p_t);
Drift apply_decision(Decision d, const Drift& candidate, const Pose& latest_gm,
                     const Pose& latest_odom, double t);

struct FusionParams {
  std::size_t n_t = 100;
  double p_t = 0.5;
  bool consistency_check = true;
  FusionCovariances cov;
  FusionSolveOptions solve;
};

struct FusionUpdate {
  bool solved = false;
  Decision decision = Decision::Accept;
  Drift drift;
};

/// Single-threaded fusion core: owns the window and the published drift.
class FusionEngine {
 public:
  explicit FusionEngine(const FusionParams& params = {}, const Pose& initial_drift = {});

  void push_odom(double t, const Pose& odom);
  /// Attaches a reliable gm pose and re-solves the window.
  FusionUpdate push_gm(double t, const Pose& gm);

  const Drift& drift() const { return drift_; }
  const FusionWindow& window() const { return window_; }
  std::size_t reject_count() const { return rejects_; }

 private:
  FusionParams params_;
  FusionWindow window_;
  Drift drift_;
  std::size_t rejects_ = 0;
};

/// FusionEngine on its own thread. Measurements go through an ordered queue;
/// the published drift is read through a locked snapshot.
class FusionWorker {
 public:
  explicit FusionWorker(const FusionParams& params = {}, const Pose& initial_drift = {});
  ~FusionWorker();
  FusionWorker(const FusionWorker&) = delete;
  FusionWorker& operator=(const FusionWorker&) = delete;

  void push_odom(double t, const Pose& odom);
  void push_gm(double t, const Pose& gm);
  Drift snapshot() const;
  /// Blocks until every queued measurement has been processed.
  void flush();
  std::size_t reject_count() const;

 private:
  struct Message {
    bool is_gm;
    double t;
    Pose pose;
  };
  void run();

  FusionEngine engine_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable idle_cv_;
  std::deque<Message> queue_;
  bool busy_ = false;
  bool stop_ = false;
  Drift snapshot_;
  std::size_t rejects_ = 0;
  std::thread thread_;
};

}  // namespace roll
