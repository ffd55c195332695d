// Serial reference vs OpenMP kernels on full-resolution grids.
// Run manually: build/bench/occgrid_bench [--benchmark_filter=...]

#include <benchmark/benchmark.h>

#include <random>

#include "occgrid/labelgen.hpp"
#include "occgrid/losses.hpp"
#include "occgrid/metrics.hpp"
#include "occgrid/pooling.hpp"
#include "occgrid/refine.hpp"
#include "occgrid/serial.hpp"

using namespace occgrid;

namespace {

VoxelConfig full_cfg() {
  return {-51.2, 51.2, -51.2, 51.2, -5.0, 3.0, 0.2};
}

std::vector<Box3D> benchmark_boxes() {
  std::vector<Box3D> boxes;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> pos(-45.0, 45.0), yaw(-3.0, 3.0);
  for (int b = 0; b < 12; ++b) {
    Box3D box;
    box.center = {pos(rng), pos(rng), -4.0};
    box.size = {4.5, 1.9, 1.7};
    box.yaw = yaw(rng);
    box.instance_id = static_cast<std::uint32_t>(b + 1);
    boxes.push_back(box);
  }
  return boxes;
}

Occupancy3D benchmark_occ() {
  return rasterize_boxes_3d(benchmark_boxes(), full_cfg());
}

void bm_rasterize_parallel(benchmark::State& state) {
  const auto cfg = full_cfg();
  const auto boxes = benchmark_boxes();
  for (auto _ : state) {
    benchmark::DoNotOptimize(rasterize_boxes_3d(boxes, cfg));
  }
}

void bm_rasterize_serial(benchmark::State& state) {
  const auto cfg = full_cfg();
  const auto boxes = benchmark_boxes();
  for (auto _ : state) {
    benchmark::DoNotOptimize(serial::rasterize_boxes_3d(boxes, cfg));
  }
}

void bm_compress_parallel(benchmark::State& state) {
  const auto occ = benchmark_occ();
  for (auto _ : state) {
    benchmark::DoNotOptimize(compress_to_bev(occ));
  }
}

void bm_compress_serial(benchmark::State& state) {
  const auto occ = benchmark_occ();
  for (auto _ : state) {
    benchmark::DoNotOptimize(serial::compress_to_bev(occ));
  }
}

void bm_confusion_parallel(benchmark::State& state) {
  const auto cfg = full_cfg();
  const auto occ = benchmark_occ();
  const auto boxes = benchmark_boxes();
  for (auto _ : state) {
    benchmark::DoNotOptimize(confusion(occ, occ, boxes, cfg));
  }
}

void bm_confusion_serial(benchmark::State& state) {
  const auto cfg = full_cfg();
  const auto occ = benchmark_occ();
  const auto boxes = benchmark_boxes();
  for (auto _ : state) {
    benchmark::DoNotOptimize(serial::confusion(occ, occ, boxes, cfg));
  }
}

void bm_pool_parallel(benchmark::State& state) {
  FeatureVolume vol(8, 256, 256, 40);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  for (auto& v : vol.data) v = u(rng);
  const PoolWeights w{0.4, 0.6};
  for (auto _ : state) {
    benchmark::DoNotOptimize(adaptive_dual_pool(vol, w));
  }
}

void bm_pool_serial(benchmark::State& state) {
  FeatureVolume vol(8, 256, 256, 40);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  for (auto& v : vol.data) v = u(rng);
  const PoolWeights w{0.4, 0.6};
  for (auto _ : state) {
    benchmark::DoNotOptimize(serial::adaptive_dual_pool(vol, w));
  }
}

void bm_bce_parallel(benchmark::State& state) {
  RealGrid2D probs(512, 512, 0.0f);
  BevOccupancy gt(512, 512, 0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (auto& v : probs.data()) v = u(rng);
  for (std::size_t n = 0; n < gt.size(); ++n) gt.data()[n] = probs.data()[n] > 0.5f ? 1 : 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bce_loss(probs, gt));
  }
}

void bm_bce_serial(benchmark::State& state) {
  RealGrid2D probs(512, 512, 0.0f);
  BevOccupancy gt(512, 512, 0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (auto& v : probs.data()) v = u(rng);
  for (std::size_t n = 0; n < gt.size(); ++n) gt.data()[n] = probs.data()[n] > 0.5f ? 1 : 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(serial::bce_loss(probs, gt));
  }
}

}  // namespace

BENCHMARK(bm_rasterize_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_rasterize_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_compress_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_compress_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_confusion_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_confusion_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_pool_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_pool_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_bce_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_bce_parallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
