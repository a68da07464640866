#include <benchmark/benchmark.h>

#include <cmath>

#include "travnav/config.hpp"
#include "travnav/harness.hpp"

using namespace travnav;

namespace {

CameraConfig default_camera() { return full_config_from(ConfigFile::parse("")).camera; }

TraversabilityImage uniform_image(const CameraConfig& cam, float value) {
  TraversabilityImage img;
  img.width = cam.intrinsics.width;
  img.height = cam.intrinsics.height;
  img.grid.assign(size_t(img.width) * img.height, value);
  img.frame_pose = State2D{0, 0, 0};
  return img;
}

void BM_mppi_step(benchmark::State& state) {
  const CameraConfig cam = default_camera();
  const TraversabilityImage img = uniform_image(cam, 0.9f);
  const TractionLookup lookup(img, cam);
  MpcConfig cfg;
  MppiConfig mcfg;
  mcfg.num_samples = int(state.range(0));
  mcfg.threads = 0;
  ControlSequence warm;
  warm.controls.assign(cfg.N, ControlInput{0.5, 0.0});
  uint64_t seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        mppi_step({1, 0, 0}, 4.0, 0.0, lookup, warm, mcfg, cfg, seed++));
  }
}
BENCHMARK(BM_mppi_step)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_oracle_render(benchmark::State& state) {
  const CameraConfig cam = default_camera();
  TractionField field;
  field.base_mu = 0.9;
  for (int i = 0; i < 12; ++i) {
    field.patches.push_back({2.0 + 2.0 * i, (i % 2 ? 1.5 : -1.5), 0.6, 0.0, 1.0});
  }
  const OracleRenderer renderer(cam);
  for (auto _ : state) {
    benchmark::DoNotOptimize(renderer.render({0, 0, 0}, field));
  }
}
BENCHMARK(BM_oracle_render)->Unit(benchmark::kMillisecond);

void BM_nmhe_solve(benchmark::State& state) {
  MeasurementWindow window(20, 0.1);
  State2D x{0, 0, 0.3};
  for (int i = 0; i <= 20; ++i) {
    MeasurementSample z{x.px, x.py, wrap_angle(x.theta - 0.3), i * 0.1};
    ControlInput u{0.6 + 0.4 * std::sin(0.31 * i), 0.8 * std::sin(0.6 * i + 0.4)};
    window.push(z, u);
    if (i < 20) x = integrate_step(x, u, TractionParams{0.7, 0.9}, 0.1);
  }
  const NmheConfig cfg;
  const NmhePriors priors;
  for (auto _ : state) {
    benchmark::DoNotOptimize(nmhe_solve(window, priors, cfg));
  }
}
BENCHMARK(BM_nmhe_solve)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
