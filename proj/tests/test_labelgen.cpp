#include <doctest.h>

#include <random>

#include "occgrid/labelgen.hpp"
#include "oracles.hpp"

using namespace occgrid;

namespace {

VoxelConfig full_range() {
  return {-51.2, 51.2, -51.2, 51.2, -5.0, 3.0, 0.2};
}

VoxelConfig tiny_range() {
  return {-3.2, 3.2, -3.2, 3.2, -0.8, 0.8, 0.2};  // 32 x 32 x 8
}

Occupancy3D random_bottom_filled(std::mt19937_64& rng, const VoxelConfig& cfg,
                                 double fill_prob = 0.4) {
  Occupancy3D g(cfg.nx(), cfg.ny(), cfg.nz(), 0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> top(0, cfg.nz() - 1);
  for (int i = 0; i < g.nx(); ++i) {
    for (int j = 0; j < g.ny(); ++j) {
      if (u(rng) > fill_prob) continue;
      const int k_top = top(rng);
      for (int k = 0; k <= k_top; ++k) g.at(i, j, k) = 1;
    }
  }
  return g;
}

}  // namespace

TEST_CASE("rasterize: empty scene produces an empty grid") {
  const auto occ = rasterize_boxes_3d({}, tiny_range());
  for (const auto v : occ.data()) CHECK(v == 0);
}

TEST_CASE("rasterize: small axis-aligned cube matches the exhaustive oracle") {
  const auto cfg = full_range();
  Box3D box;
  box.center = {0.1, 0.1, -4.7};
  box.size = {0.4, 0.4, 0.4};
  box.yaw = 0.0;
  const auto occ = rasterize_boxes_3d({box}, cfg);
  const auto expect = oracle::rasterize_boxes({box}, cfg);
  CHECK(occ == expect);
  // The box faces pass exactly through voxel centers; the frozen values
  // below are what the center-in-box oracle evaluates to in doubles: a
  // 2x2x1 block at rows/cols {256,257}, layer 1.
  std::int64_t occupied = 0;
  for (const auto v : occ.data()) occupied += v;
  CHECK(occupied == 4);
  for (int i : {256, 257}) {
    for (int j : {256, 257}) CHECK(occ.at(i, j, 1) == 1);
  }
  CHECK(occ.at(255, 255, 1) == 0);
  CHECK(occ.at(256, 256, 0) == 0);
}

TEST_CASE("rasterize: face-free cube occupies the full enclosing block") {
  // Same cube nudged so no face touches a voxel center: the inclusive
  // center-in-box rule then gives the clean 2x2x2 block.
  const auto cfg = full_range();
  Box3D box;
  box.center = {0.2, 0.2, -4.6};
  box.size = {0.39, 0.39, 0.39};
  box.yaw = 0.0;
  const auto occ = rasterize_boxes_3d({box}, cfg);
  CHECK(occ == oracle::rasterize_boxes({box}, cfg));
  std::int64_t occupied = 0;
  for (const auto v : occ.data()) occupied += v;
  CHECK(occupied == 8);
  for (int i : {256, 257}) {
    for (int j : {256, 257}) {
      for (int k : {1, 2}) CHECK(occ.at(i, j, k) == 1);
    }
  }
}

TEST_CASE("rasterize: quarter-turn yaw equals swapped length and width") {
  const auto cfg = tiny_range();
  Box3D a;
  a.center = {0.05, -0.03, 0.0};
  a.size = {1.64, 0.86, 1.2};  // faces clear of voxel centers
  a.yaw = 1.5707963267948966;
  Box3D b = a;
  b.size = {0.86, 1.64, 1.2};
  b.yaw = 0.0;
  const auto occ_a = rasterize_boxes_3d({a}, cfg);
  const auto occ_b = rasterize_boxes_3d({b}, cfg);
  std::int64_t count_a = 0, count_b = 0;
  for (const auto v : occ_a.data()) count_a += v;
  for (const auto v : occ_b.data()) count_b += v;
  CHECK(count_a == count_b);
  CHECK(count_a > 0);
}

TEST_CASE("rasterize: random scenes match the exhaustive oracle bitwise") {
  const auto cfg = tiny_range();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> pos(-2.5, 2.5), zc(-0.6, 0.6), len(0.3, 2.0),
      hgt(0.3, 1.2), yaw(-3.1, 3.1);
  std::uniform_int_distribution<int> n_boxes(0, 4);
  for (int scene = 0; scene < 25; ++scene) {
    std::vector<Box3D> boxes;
    const int n = n_boxes(rng);
    for (int b = 0; b < n; ++b) {
      Box3D box;
      box.center = {pos(rng), pos(rng), zc(rng)};
      box.size = {len(rng), len(rng), hgt(rng)};
      box.yaw = yaw(rng);
      box.instance_id = static_cast<std::uint32_t>(b + 1);
      boxes.push_back(box);
    }
    CHECK(rasterize_boxes_3d(boxes, cfg) == oracle::rasterize_boxes(boxes, cfg));
  }
}

TEST_CASE("rasterize monotonicity: growing a box never unsets voxels") {
  const auto cfg = tiny_range();
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> pos(-2.0, 2.0), len(0.3, 1.5), grow(0.0, 1.0);
  for (int n = 0; n < 20; ++n) {
    Box3D small;
    small.center = {pos(rng), pos(rng), 0.0};
    small.size = {len(rng), len(rng), len(rng)};
    small.yaw = pos(rng);
    Box3D big = small;
    big.size = {small.size[0] + grow(rng), small.size[1] + grow(rng),
                small.size[2] + grow(rng)};
    const auto occ_small = rasterize_boxes_3d({small}, cfg);
    const auto occ_big = rasterize_boxes_3d({big}, cfg);
    for (std::size_t c = 0; c < occ_small.size(); ++c) {
      CHECK(occ_small.data()[c] <= occ_big.data()[c]);
    }
  }
}

TEST_CASE("instance footprints carry IDs with smaller-id overlap rule") {
  const auto cfg = tiny_range();
  CHECK(rasterize_instances_bev({}, cfg) == InstanceMap(cfg.nx(), cfg.ny(), 0));

  Box3D a;
  a.center = {0.0, 0.0, 0.0};
  a.size = {1.0, 1.0, 0.5};
  a.instance_id = 7;
  Box3D b = a;
  b.center = {0.4, 0.0, 0.0};
  b.instance_id = 3;
  const auto inst = rasterize_instances_bev({a, b}, cfg);
  CHECK(inst == oracle::rasterize_footprints({a, b}, cfg));

  // Overlap cells resolve to id 3.
  bool saw_overlap = false;
  const auto only_a = oracle::rasterize_footprints({a}, cfg);
  const auto only_b = oracle::rasterize_footprints({b}, cfg);
  for (int i = 0; i < inst.rows(); ++i) {
    for (int j = 0; j < inst.cols(); ++j) {
      if (only_a.at(i, j) && only_b.at(i, j)) {
        saw_overlap = true;
        CHECK(inst.at(i, j) == 3);
      }
    }
  }
  CHECK(saw_overlap);
}

TEST_CASE("compress_to_bev ORs columns") {
  const auto cfg = tiny_range();
  Occupancy3D g(cfg.nx(), cfg.ny(), cfg.nz(), 0);
  CHECK(compress_to_bev(g) == BevOccupancy(cfg.nx(), cfg.ny(), 0));

  g.at(3, 4, 7) = 1;
  auto bev = compress_to_bev(g);
  CHECK(bev.at(3, 4) == 1);
  std::int64_t ones = 0;
  for (const auto v : bev.data()) ones += v;
  CHECK(ones == 1);

  std::mt19937_64 rng(5);
  std::bernoulli_distribution coin(0.1);
  for (auto& v : g.data()) v = coin(rng) ? 1 : 0;
  CHECK(compress_to_bev(g) == oracle::column_or(g));
}

TEST_CASE("extract_heights reports the top face of the highest voxel") {
  const auto cfg = full_range();
  Occupancy3D g(cfg.nx(), cfg.ny(), cfg.nz(), 0);
  for (int k = 0; k <= 7; ++k) g.at(10, 10, k) = 1;
  g.at(20, 20, 39) = 1;
  const auto h = extract_heights(g, cfg);
  CHECK_FALSE(h.get(0, 0).has_value());
  // Heights are stored in f32.
  CHECK(*h.get(10, 10) == doctest::Approx(-3.4).epsilon(1e-6));
  CHECK(*h.get(20, 20) == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("build_fine_grained inverts extract_heights") {
  const auto cfg = full_range();
  BevOccupancy bev(cfg.nx(), cfg.ny(), 0);
  HeightMap h(cfg.nx(), cfg.ny());
  bev.at(10, 10) = 1;
  h.set(10, 10, -3.4f);
  const auto g = build_fine_grained(bev, h, cfg);
  for (int k = 0; k < cfg.nz(); ++k) CHECK(g.at(10, 10, k) == (k <= 7 ? 1 : 0));
}

TEST_CASE("build_fine_grained validates the paired height mask") {
  const auto cfg = tiny_range();
  BevOccupancy bev(cfg.nx(), cfg.ny(), 0);
  HeightMap h(cfg.nx(), cfg.ny());
  bev.at(1, 1) = 1;  // occupied but undefined height
  CHECK_THROWS_AS(build_fine_grained(bev, h, cfg), InvariantError);
  bev.at(1, 1) = 0;
  h.set(2, 2, 0.2f);  // height without occupancy
  CHECK_THROWS_AS(build_fine_grained(bev, h, cfg), InvariantError);
}

TEST_CASE("decoupling round trip on random bottom-filled grids") {
  const auto cfg = tiny_range();
  std::mt19937_64 rng(99);
  for (int n = 0; n < 30; ++n) {
    const auto g = random_bottom_filled(rng, cfg);
    const auto bev = compress_to_bev(g);
    const auto h = extract_heights(g, cfg);
    CHECK(build_fine_grained(bev, h, cfg) == g);
  }
}

TEST_CASE("gt_backward_flow points at the previous centroid") {
  InstanceMap prev(32, 32, 0), curr(32, 32, 0);
  // A 3x3 instance centered at (10, 10) previously; moved to rows +2.
  for (int i = 9; i <= 11; ++i) {
    for (int j = 9; j <= 11; ++j) prev.at(i, j) = 4;
  }
  for (int i = 11; i <= 13; ++i) {
    for (int j = 9; j <= 11; ++j) curr.at(i, j) = 4;
  }
  const auto flow = gt_backward_flow(curr, prev);
  CHECK(flow.d_row.at(12, 10) == doctest::Approx(-2.0));
  CHECK(flow.d_col.at(12, 10) == doctest::Approx(0.0));
  CHECK(flow.d_row.at(11, 9) == doctest::Approx(-1.0));
  CHECK(flow.d_col.at(11, 9) == doctest::Approx(1.0));
  CHECK(flow.d_row.at(0, 0) == 0.0f);
}

TEST_CASE("gt_backward_flow: static pixel at its own centroid and new instances") {
  InstanceMap prev(8, 8, 0), curr(8, 8, 0);
  prev.at(4, 4) = 2;
  curr.at(4, 4) = 2;
  curr.at(1, 1) = 9;  // no match at t-1
  const auto flow = gt_backward_flow(curr, prev);
  CHECK(flow.d_row.at(4, 4) == 0.0f);
  CHECK(flow.d_col.at(4, 4) == 0.0f);
  CHECK(flow.d_row.at(1, 1) == 0.0f);
  CHECK(flow.d_col.at(1, 1) == 0.0f);
}

TEST_CASE("generate_labels wires the full pipeline together") {
  const auto cfg = tiny_range();

  SUBCASE("empty scene") {
    const std::vector<std::vector<Box3D>> boxes(7);
    const auto seq = generate_labels(boxes, cfg, 2, 4);
    CHECK(seq.frames.size() == 7);
    CHECK(seq.flows.size() == 5);
    for (const auto& f : seq.frames) {
      for (const auto v : f.occ_bb.data()) CHECK(v == 0);
    }
    for (const auto& fl : seq.flows) {
      CHECK(fl.d_row == Grid2D<float>(cfg.nx(), cfg.ny(), 0.0f));
    }
  }

  SUBCASE("wrong frame count") {
    const std::vector<std::vector<Box3D>> boxes(6);
    CHECK_THROWS_AS(generate_labels(boxes, cfg, 2, 4), InvariantError);
  }

  SUBCASE("static box: identical frames, centroid-pointing flow, invariants hold") {
    Box3D box;
    box.center = {0.3, -0.5, -0.2};
    box.size = {1.2, 0.8, 1.2};
    box.yaw = 0.4;
    const std::vector<std::vector<Box3D>> boxes(7, {box});
    const auto seq = generate_labels(boxes, cfg, 2, 4);
    for (const auto& f : seq.frames) {
      CHECK(f.occ_bb == seq.frames[0].occ_bb);
      CHECK(compress_to_bev(f.occ_bb) == f.occ_bev);
      CHECK(compress_to_bev(f.occ_fg) == f.occ_bev);
      CHECK(extract_heights(f.occ_fg, cfg) == f.heights);
      CHECK_NOTHROW(validate_paired(f.heights, f.occ_bev));
    }
    // The centripetal field points every labeled pixel at the (static)
    // footprint centroid, so all frames carry the same flow.
    const auto& inst = seq.frame_at(0).instances;
    double sum_r = 0, sum_c = 0, n = 0;
    for (int i = 0; i < inst.rows(); ++i) {
      for (int j = 0; j < inst.cols(); ++j) {
        if (inst.at(i, j)) {
          sum_r += i;
          sum_c += j;
          n += 1;
        }
      }
    }
    REQUIRE(n > 0);
    for (const auto& fl : seq.flows) {
      CHECK(fl == seq.flows[0]);
      for (int i = 0; i < inst.rows(); ++i) {
        for (int j = 0; j < inst.cols(); ++j) {
          if (!inst.at(i, j)) continue;
          CHECK(fl.d_row.at(i, j) == doctest::Approx(sum_r / n - i).epsilon(1e-6));
          CHECK(fl.d_col.at(i, j) == doctest::Approx(sum_c / n - j).epsilon(1e-6));
        }
      }
    }
  }

  SUBCASE("floor-reaching box keeps fine-grained inside the envelope") {
    Box3D box;
    box.size = {1.4, 1.0, 1.0};
    box.center = {0.0, 0.0, cfg.z_min + 0.5 * box.size[2]};
    const std::vector<std::vector<Box3D>> boxes(7, {box});
    const auto seq = generate_labels(boxes, cfg, 2, 4);
    for (const auto& f : seq.frames) {
      for (std::size_t n = 0; n < f.occ_fg.size(); ++n) {
        CHECK(f.occ_fg.data()[n] <= f.occ_bb.data()[n]);
      }
    }
  }
}

TEST_CASE("z-collapse commutes with rasterization") {
  const auto cfg = tiny_range();
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> pos(-2.0, 2.0), len(0.4, 1.8), yaw(-3.0, 3.0);
  for (int n = 0; n < 10; ++n) {
    std::vector<Box3D> boxes;
    for (int b = 0; b < 3; ++b) {
      Box3D box;
      // Spans the whole z range so no box is lost to the collapse.
      box.center = {pos(rng), pos(rng), 0.0};
      box.size = {len(rng), len(rng), 1.6};
      box.yaw = yaw(rng);
      box.instance_id = static_cast<std::uint32_t>(b + 1);
      boxes.push_back(box);
    }
    const auto bev = compress_to_bev(rasterize_boxes_3d(boxes, cfg));
    const auto footprints = oracle::rasterize_footprints(boxes, cfg);
    for (int i = 0; i < bev.rows(); ++i) {
      for (int j = 0; j < bev.cols(); ++j) {
        CHECK(bev.at(i, j) == (footprints.at(i, j) ? 1 : 0));
      }
    }
  }
}
