#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "roll/keymap.hpp"

namespace roll {

enum class Mode : std::uint8_t { Normal, TemporaryMapping };
enum class AnomalyEvent : std::uint8_t { None, EnterTM, ExitTM };

struct AnomalyState {
  Mode mode = Mode::Normal;
  std::size_t entry_index = 0;
  double mu_E = 0.3;
  double mu_M = 0.5;
};

/// Hysteresis switch: Normal -> TM when mu < mu_E, TM -> Normal when mu > mu_M.
/// Throws InvalidParameter unless mu_M > mu_E and mu in [0, 1].
std::pair<AnomalyState, AnomalyEvent> anomaly_step(const AnomalyState& state, double mu,
                                                   std::size_t index = 0);

/// Log(meas^-1 x_i^-1 x_j). Jacobians for right perturbations x <- x Exp(d).
Vec6 odom_residual(const Pose& x_i, const Pose& x_j, const Pose& meas, Mat6* J_i = nullptr,
                   Mat6* J_j = nullptr);
/// Log(meas^-1 x_i).
Vec6 unary_residual(const Pose& x_i, const Pose& meas, Mat6* J = nullptr);

struct OdomFactor {
  std::size_t i = 0, j = 0;
  Pose meas;
  Vec6 cov;  // diagonal covariance, (rho, phi)
};

struct UnaryFactor {
  std::size_t i = 0;
  Pose meas;
  Vec6 cov;
};

struct PoseGraph {
  std::vector<Pose> nodes;
  std::vector<OdomFactor> odom;
  std::vector<UnaryFactor> unary;
};

/// Sum of r^T Cov^-1 r over all factors.
double graph_cost(const PoseGraph& g);

struct GraphOptions {
  int max_iters = 50;
  double min_decrease = 1e-9;
  double lambda0 = 1e-4;
};

struct GraphResult {
  std::vector<Pose> nodes;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;
};

/// Damped Gauss-Newton on the sparse normal equations.
/// Throws InvalidParameter for a malformed graph, NumericalFailure on non-finite cost.
GraphResult optimize_graph(const PoseGraph& g, const GraphOptions& opts = {});

struct TemporalCovariances {
  Vec6 odom = (Vec6() << 0.01, 0.01, 0.01, 0.0003, 0.0003, 0.0003).finished();
  Vec6 gm = (Vec6() << 0.04, 0.04, 0.04, 0.0012, 0.0012, 0.0012).finished();
};

struct TempFrame {
  Keyframe keyframe;  // obs_pose holds the pre-optimization estimate
  Pose odom_pose;
  std::optional<Pose> gm_pose;
  double t = 0.0;
};

/// Pre-anomaly sliding window followed by the frames recorded during TM.
class TempBuffer {
 public:
  explicit TempBuffer(std::size_t window_cap = 5) : cap_(window_cap) {}

  /// Normal mode: keeps at most window_cap frames, dropping the oldest.
  void push_window(TempFrame f);
  /// TM mode: appends without limit.
  void push_tm(TempFrame f);
  void clear() { frames_.clear(); }

  const std::vector<TempFrame>& frames() const { return frames_; }
  std::size_t size() const { return frames_.size(); }
  bool empty() const { return frames_.empty(); }
  const TempFrame& back() const { return frames_.back(); }
  std::size_t window_cap() const { return cap_; }

 private:
  std::size_t cap_;
  std::vector<TempFrame> frames_;
};

struct TmCloseResult {
  std::vector<Keyframe> keyframes;
  PoseGraph graph;
  GraphResult solution;
};

/// Builds the merge graph over the buffered frames (the last frame is the
/// exit frame) with unaries on the first anchored node and the exit node,
/// solves it, and writes optimized observation poses into the keyframes.
TmCloseResult close_tm_session(const TempBuffer& buf, const Pose& exit_gm_pose,
                               const TemporalCovariances& cov = {},
                               const GraphOptions& opts = {});

}  // namespace roll
