#pragma once

#include <string>
#include <vector>

#include "roll/scan_io.hpp"

namespace roll {

struct ErrorSample {
  double t = 0.0;
  double e = 0.0;        // translation error, metres
  double rot_err = 0.0;  // geodesic rotation error, radians
};

struct ErrorSeries {
  std::vector<ErrorSample> samples;
  double window = 0.05;
  std::size_t unmatched = 0;
  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

/// Nearest-in-time truth pose within `window` for each estimate.
/// Throws NoOverlap when nothing associates, InvalidParameter on empty input.
ErrorSeries associate_trajectories(const Trajectory& est, const Trajectory& truth,
                                   double window = 0.05);

struct ErrorSummary {
  std::size_t count = 0;
  double rmse = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double rot_rmse = 0.0;
  std::vector<double> thresholds;
  std::vector<double> pct_below;  // fractions in [0, 1]
  double success_ratio = 0.0;     // pct_below(1.0)
};

/// Throws EmptySeries.
ErrorSummary summarize(const ErrorSeries& errs, const std::vector<double>& thresholds);
/// Fraction of errors strictly below tau.
double pct_below(const ErrorSeries& errs, double tau);
/// Samples whose timestamps fall in [t0, t1].
ErrorSeries slice(const ErrorSeries& errs, double t0, double t1);

/// RMSE/Max then one column per threshold, in percent.
std::string format_summary_table(const std::vector<std::pair<std::string, ErrorSummary>>& rows);

}  // namespace roll
