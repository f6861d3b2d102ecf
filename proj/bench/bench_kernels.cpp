#include <benchmark/benchmark.h>

#include "roll/matching.hpp"
#include "roll/pipeline.hpp"
#include "roll/sim.hpp"

using namespace roll;

namespace {

World bench_world() {
  World w;
  w.add(Primitive::plane(Vec3::Zero(), Vec3::UnitZ()));
  for (int i = 0; i < 24; ++i) {
    const double a = i * 2.0 * 3.14159265358979 / 24.0;
    w.add(Primitive::box(Vec3(18.0 * std::cos(a), 18.0 * std::sin(a), 3.0), a, Vec3(4, 6, 6), "building"));
    w.add(Primitive::cylinder(Vec3(9.0 * std::cos(a + 0.1), 9.0 * std::sin(a + 0.1), 2.5), 0.3, 5.0, "pole"));
  }
  return w;
}

const Pose kSensor(Vec3(0.0, 0.0, 1.8), Quat::Identity());

struct Fixture {
  World world = bench_world();
  SensorModel sensor = SensorModel::default16();
  FeatureFrame frame;
  LocalMap local;

  Fixture() {
    const Scan scan = raycast_scan(world, sensor, kSensor, 1);
    frame = downsample_features(extract_features(scan.cloud, scan.rings), 0.4);
    GlobalMap map;
    for (int k = 0; k < 5; ++k) {
      const Pose p = kSensor * Pose::translation(0.8 * k, 0.0, 0.0);
      const Scan s = raycast_scan(world, sensor, p, 10 + k);
      map.insert(make_keyframe(map.next_id(), p, extract_features(s.cloud, s.rings), 0.4));
    }
    local = build_local_map(map, kSensor, 25.0);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_Raycast(benchmark::State& state) {
  const auto& f = fixture();
  const Exec exec = state.range(0) ? Exec::Parallel : Exec::Serial;
  for (auto _ : state) {
    benchmark::DoNotOptimize(raycast_scan(f.world, f.sensor, kSensor, 3, exec));
  }
}
BENCHMARK(BM_Raycast)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Associate(benchmark::State& state) {
  const auto& f = fixture();
  const Exec exec = state.range(0) ? Exec::Parallel : Exec::Serial;
  for (auto _ : state) {
    benchmark::DoNotOptimize(associate(f.frame, kSensor, f.local, {}, exec));
  }
}
BENCHMARK(BM_Associate)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_NormalEquations(benchmark::State& state) {
  const auto& f = fixture();
  const Exec exec = state.range(0) ? Exec::Parallel : Exec::Serial;
  const auto corrs = associate(f.frame, kSensor, f.local);
  for (auto _ : state) {
    benchmark::DoNotOptimize(accumulate_normal_equations(corrs, kSensor, exec));
  }
}
BENCHMARK(BM_NormalEquations)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_Optimize(benchmark::State& state) {
  const auto& f = fixture();
  MatchOptions opts;
  opts.exec = state.range(0) ? Exec::Parallel : Exec::Serial;
  const Pose guess = kSensor * se3_exp((Vec6() << 0.2, -0.1, 0.05, 0.0, 0.0, 0.03).finished());
  for (auto _ : state) {
    benchmark::DoNotOptimize(optimize(f.frame, guess, f.local, opts));
  }
}
BENCHMARK(BM_Optimize)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Knn(benchmark::State& state) {
  const auto& f = fixture();
  const auto& idx = f.local.surf_index;
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(idx.knn(idx.point(static_cast<std::uint32_t>(i++ % idx.size())), 5));
  }
}
BENCHMARK(BM_Knn);

}  // namespace

BENCHMARK_MAIN();
