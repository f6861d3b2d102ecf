#include "roll/error.hpp"
#include "roll/eval.hpp"
#include "util.hpp"

using namespace roll;

namespace {

Trajectory line(std::size_t n, double dt, double t0 = 0.0) {
  Trajectory t;
  for (std::size_t k = 0; k < n; ++k) t.push_back({t0 + dt * k, Pose::translation(0.5 * k, 0, 0)});
  return t;
}

ErrorSeries series(std::vector<double> e) {
  ErrorSeries s;
  for (std::size_t i = 0; i < e.size(); ++i) s.samples.push_back({static_cast<double>(i), e[i], 0.0});
  return s;
}

}  // namespace

TEST_SUITE("examples") {
  TEST_CASE("associate_trajectories examples") {
    const Trajectory truth = line(50, 1.0);
    const ErrorSeries same = associate_trajectories(truth, truth);
    CHECK(same.size() == 50);
    for (const auto& s : same.samples) CHECK(s.e == 0.0);

    Trajectory shifted = truth;
    for (auto& tp : shifted) tp.t += 0.03;
    const ErrorSeries near = associate_trajectories(shifted, truth);
    CHECK(near.size() == 50);
    for (const auto& s : near.samples) CHECK(s.e == 0.0);

    for (auto& tp : shifted) tp.t += 0.03;
    try {
      associate_trajectories(shifted, truth);
      FAIL("expected NoOverlap");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NoOverlap);
    }
    CHECK_THROWS_AS(associate_trajectories(Trajectory{}, truth), Error);
  }

  TEST_CASE("summarize examples") {
    const ErrorSummary zero = summarize(series({0, 0, 0}), {0.1, 0.5});
    CHECK(zero.rmse == 0.0);
    for (double p : zero.pct_below) CHECK(p == 1.0);
    CHECK(zero.success_ratio == 1.0);

    const ErrorSummary two = summarize(series({0.1, 0.3}), {0.2});
    CHECK(two.rmse == doctest::Approx(0.2236).epsilon(1e-4));
    CHECK(two.pct_below[0] == 0.5);
    CHECK(two.max == doctest::Approx(0.3));

    const ErrorSummary one = summarize(series({1.0}), {});
    CHECK(one.success_ratio == 0.0);
    CHECK_THROWS_AS(summarize(ErrorSeries{}, {0.1}), Error);
  }
}

TEST_SUITE("properties") {
  TEST_CASE("pct_below is monotone and slice selects by time") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    std::vector<double> e(500);
    for (auto& x : e) x = u(rng);
    const ErrorSeries s = series(e);
    double prev = 0.0;
    for (double tau = 0.0; tau <= 2.5; tau += 0.05) {
      const double p = pct_below(s, tau);
      REQUIRE(p >= prev);
      prev = p;
    }
    CHECK(prev == 1.0);
    const ErrorSeries mid = slice(s, 100.0, 199.0);
    CHECK(mid.size() == 100);
    CHECK(mid.samples.front().t == 100.0);
  }

  TEST_CASE("rotation error and the summary table") {
    const Trajectory truth = line(10, 0.1);
    Trajectory est = truth;
    for (auto& tp : est) tp.pose = tp.pose * Pose::rot_z(0.1) * Pose::translation(0, 0.2, 0);
    const ErrorSeries s = associate_trajectories(est, truth);
    for (const auto& x : s.samples) {
      CHECK(x.e == doctest::Approx(0.2));
      CHECK(x.rot_err == doctest::Approx(0.1));
    }
    const std::string table = format_summary_table({{"fused", summarize(s, {0.1, 0.5})}});
    CHECK(table.find("fused") != std::string::npos);
    CHECK(table.find("RMSE") != std::string::npos);
  }
}
