#include "roll/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "roll/error.hpp"

namespace roll {

ErrorSeries associate_trajectories(const Trajectory& est, const Trajectory& truth,
                                   double window) {
  if (est.empty() || truth.empty()) {
    throw Error(ErrorCode::InvalidParameter, "trajectories must be non-empty");
  }
  std::vector<std::size_t> order(truth.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return truth[a].t < truth[b].t; });

  ErrorSeries out;
  out.window = window;
  for (const auto& e : est) {
    auto it = std::lower_bound(order.begin(), order.end(), e.t,
                               [&](std::size_t i, double t) { return truth[i].t < t; });
    std::size_t best = truth.size();
    double best_dt = window;
    for (auto cand : {it, it == order.begin() ? it : it - 1}) {
      if (cand == order.end()) continue;
      const double dt = std::abs(truth[*cand].t - e.t);
      if (dt <= best_dt && (best == truth.size() || dt < std::abs(truth[best].t - e.t))) {
        best = *cand;
        best_dt = dt;
      }
    }
    if (best == truth.size()) {
      ++out.unmatched;
      continue;
    }
    const Pose& g = truth[best].pose;
    out.samples.push_back({e.t, (e.pose.p - g.p).norm(), rotation_angle(g.q.conjugate() * e.pose.q)});
  }
  if (out.samples.empty()) {
    throw Error(ErrorCode::NoOverlap, "no estimate within the association window");
  }
  return out;
}

double pct_below(const ErrorSeries& errs, double tau) {
  if (errs.empty()) return 0.0;
  const auto n = std::count_if(errs.samples.begin(), errs.samples.end(),
                               [tau](const ErrorSample& s) { return s.e < tau; });
  return static_cast<double>(n) / static_cast<double>(errs.size());
}

ErrorSummary summarize(const ErrorSeries& errs, const std::vector<double>& thresholds) {
  if (errs.empty()) {
    throw Error(ErrorCode::EmptySeries, "no errors to summarize");
  }
  ErrorSummary s;
  s.count = errs.size();
  double sq = 0.0, sum = 0.0, rsq = 0.0;
  for (const auto& e : errs.samples) {
    sq += e.e * e.e;
    sum += e.e;
    rsq += e.rot_err * e.rot_err;
    s.max = std::max(s.max, e.e);
  }
  const double n = static_cast<double>(s.count);
  s.rmse = std::sqrt(sq / n);
  s.mean = sum / n;
  s.rot_rmse = std::sqrt(rsq / n);
  s.thresholds = thresholds;
  for (double tau : thresholds) s.pct_below.push_back(pct_below(errs, tau));
  s.success_ratio = pct_below(errs, 1.0);
  return s;
}

ErrorSeries slice(const ErrorSeries& errs, double t0, double t1) {
  ErrorSeries out;
  out.window = errs.window;
  for (const auto& e : errs.samples) {
    if (e.t >= t0 && e.t <= t1) out.samples.push_back(e);
  }
  return out;
}

std::string format_summary_table(const std::vector<std::pair<std::string, ErrorSummary>>& rows) {
  std::string out;
  char buf[128];
  if (rows.empty()) return out;
  std::snprintf(buf, sizeof buf, "%-12s %8s %8s", "method", "RMSE", "Max");
  out += buf;
  for (double tau : rows.front().second.thresholds) {
    std::snprintf(buf, sizeof buf, " %8s", ("<" + std::to_string(tau).substr(0, 4) + "m").c_str());
    out += buf;
  }
  std::snprintf(buf, sizeof buf, " %8s\n", "S.R.(%)");
  out += buf;
  for (const auto& [name, s] : rows) {
    std::snprintf(buf, sizeof buf, "%-12s %8.3f %8.3f", name.c_str(), s.rmse, s.max);
    out += buf;
    for (double p : s.pct_below) {
      std::snprintf(buf, sizeof buf, " %8.1f", 100.0 * p);
      out += buf;
    }
    std::snprintf(buf, sizeof buf, " %8.1f\n", 100.0 * s.success_ratio);
    out += buf;
  }
  return out;
}

}  // namespace roll
