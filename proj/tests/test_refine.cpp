#include <doctest.h>

#include <random>

#include "occgrid/labelgen.hpp"
#include "occgrid/refine.hpp"
#include "occgrid/sim.hpp"
#include "oracles.hpp"

using namespace occgrid;

namespace {

RealGrid2D zeros(int rows, int cols) { return RealGrid2D(rows, cols, 0.0f); }

}  // namespace

TEST_CASE("nms: empty grid and single peak") {
  CHECK(extract_centers_nms(zeros(16, 16), {0.5, 2}).empty());

  auto grid = zeros(16, 16);
  grid.at(5, 5) = 0.9f;
  const auto centers = extract_centers_nms(grid, {0.5, 2});
  REQUIRE(centers.size() == 1);
  CHECK(centers[0].row == 5);
  CHECK(centers[0].col == 5);
  CHECK(centers[0].instance_id == 1);
  CHECK(centers[0].score == doctest::Approx(0.9));
}

TEST_CASE("nms: radius semantics on two nearby peaks") {
  auto grid = zeros(16, 16);
  grid.at(5, 5) = 0.9f;
  grid.at(6, 6) = 0.8f;

  const auto wide = extract_centers_nms(grid, {0.5, 2});
  REQUIRE(wide.size() == 1);
  CHECK(wide[0].row == 5);

  const auto narrow = extract_centers_nms(grid, {0.5, 1});
  REQUIRE(narrow.size() == 2);
  CHECK(narrow[0].instance_id == 1);
  CHECK(narrow[0].row == 5);
  CHECK(narrow[1].instance_id == 2);
  CHECK(narrow[1].row == 6);
}

TEST_CASE("nms: plateau resolves to the lexicographically smallest cell") {
  auto grid = zeros(8, 8);
  for (int i = 3; i <= 4; ++i) {
    for (int j = 3; j <= 4; ++j) grid.at(i, j) = 0.7f;
  }
  const auto centers = extract_centers_nms(grid, {0.5, 3});
  REQUIRE(centers.size() == 1);
  CHECK(centers[0].row == 3);
  CHECK(centers[0].col == 3);
}

TEST_CASE("nms: parameter validation") {
  CHECK_THROWS_AS(extract_centers_nms(zeros(4, 4), {0.5, 0}), InvariantError);
  CHECK_THROWS_AS(extract_centers_nms(zeros(4, 4), {0.0, 2}), InvariantError);
  CHECK_THROWS_AS(extract_centers_nms(zeros(4, 4), {1.0, 2}), InvariantError);
}

TEST_CASE("nms matches the brute-force scan on random grids") {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::uniform_int_distribution<int> radius(1, 4);
  for (int trial = 0; trial < 30; ++trial) {
    auto grid = zeros(20, 20);
    for (auto& v : grid.data()) v = u(rng);
    const int r = radius(rng);
    const auto got = extract_centers_nms(grid, {0.5, r});
    const auto expect = oracle::nms_scan(grid, 0.5, r);
    REQUIRE(got.size() == expect.size());
    for (std::size_t n = 0; n < got.size(); ++n) {
      CHECK(got[n] == expect[n]);
    }
  }
}

TEST_CASE("associate_step follows flow onto the previous footprint") {
  const int n = 16;
  InstanceMap prev(n, n, 0);
  for (int i = 4; i <= 6; ++i) {
    for (int j = 4; j <= 6; ++j) prev.at(i, j) = 1;
  }
  const std::vector<InstanceCenter> centers{{5, 5, 0.9, 1}};

  SUBCASE("zero flow keeps the footprint id") {
    BevOccupancy occ(n, n, 0);
    for (int i = 4; i <= 6; ++i) {
      for (int j = 4; j <= 6; ++j) occ.at(i, j) = 1;
    }
    const auto out = associate_step(centers, prev, FlowField(n, n), occ);
    for (int i = 4; i <= 6; ++i) {
      for (int j = 4; j <= 6; ++j) CHECK(out.at(i, j) == 1);
    }
  }

  SUBCASE("moved instance lands on its previous cells") {
    BevOccupancy occ(n, n, 0);
    FlowField flow(n, n);
    for (int i = 6; i <= 8; ++i) {
      for (int j = 4; j <= 6; ++j) {
        occ.at(i, j) = 1;
        flow.d_row.at(i, j) = -2.0f;
      }
    }
    const auto out = associate_step(centers, prev, flow, occ);
    for (int i = 6; i <= 8; ++i) {
      for (int j = 4; j <= 6; ++j) CHECK(out.at(i, j) == 1);
    }
  }

  SUBCASE("off-grid landing drops to background") {
    BevOccupancy occ(n, n, 0);
    FlowField flow(n, n);
    occ.at(1, 1) = 1;
    flow.d_row.at(1, 1) = -5.0f;
    const auto out = associate_step(centers, prev, flow, occ);
    CHECK(out.at(1, 1) == 0);
  }

  SUBCASE("landing on previous background drops to background") {
    BevOccupancy occ(n, n, 0);
    occ.at(12, 12) = 1;  // zero flow, lands on empty prev cell
    const auto out = associate_step(centers, prev, FlowField(n, n), occ);
    CHECK(out.at(12, 12) == 0);
  }

  SUBCASE("empty center list maps everything to background") {
    BevOccupancy occ(n, n, 1);
    const auto out = associate_step({}, prev, FlowField(n, n), occ);
    CHECK(out == InstanceMap(n, n, 0));
  }
}

TEST_CASE("associate_step matches the exhaustive nearest-center oracle") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<float> uf(-6.0f, 6.0f);
  std::bernoulli_distribution coin(0.4);
  std::uniform_int_distribution<int> pos(0, 15), n_centers(1, 4);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 16;
    InstanceMap prev(n, n, 0);
    BevOccupancy occ(n, n, 0);
    FlowField flow(n, n);
    std::vector<InstanceCenter> centers;
    const int nc = n_centers(rng);
    for (int c = 0; c < nc; ++c) {
      centers.push_back({pos(rng), pos(rng), 1.0 - 0.1 * c, static_cast<std::uint32_t>(c + 1)});
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        prev.at(i, j) = coin(rng) ? (pos(rng) % nc) + 1 : 0;
        occ.at(i, j) = coin(rng) ? 1 : 0;
        flow.d_row.at(i, j) = uf(rng);
        flow.d_col.at(i, j) = uf(rng);
      }
    }
    CHECK(associate_step(centers, prev, flow, occ) ==
          oracle::associate_exhaustive(centers, prev, flow, occ));
  }
}

TEST_CASE("clip_mask restricts ids to one") {
  InstanceMap m(4, 4, 0);
  m.at(0, 0) = 1;
  m.at(1, 1) = 7;
  const auto mask = clip_mask(m);
  CHECK(mask.at(0, 0) == 1);
  CHECK(mask.at(1, 1) == 1);
  CHECK(mask.at(2, 2) == 0);
  // Idempotent on binary content.
  InstanceMap as_map(4, 4, 0);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) as_map.at(i, j) = mask.at(i, j);
  }
  CHECK(clip_mask(as_map) == mask);
}

TEST_CASE("refine_occupancy thresholds then masks") {
  RealGrid2D initial(1, 3, 0.0f);
  initial.at(0, 0) = 0.9f;
  initial.at(0, 1) = 0.4f;
  initial.at(0, 2) = 0.8f;
  BevOccupancy mask(1, 3, 0);
  mask.at(0, 0) = 1;
  mask.at(0, 1) = 1;
  const auto out = refine_occupancy(initial, mask, 0.5);
  CHECK(out.at(0, 0) == 1);
  CHECK(out.at(0, 1) == 0);
  CHECK(out.at(0, 2) == 0);

  BevOccupancy all(1, 3, 1);
  const auto pure = refine_occupancy(initial, all, 0.5);
  CHECK(pure.at(0, 0) == 1);
  CHECK(pure.at(0, 1) == 0);
  CHECK(pure.at(0, 2) == 1);

  CHECK(refine_occupancy(initial, BevOccupancy(1, 3, 0), 0.5) == BevOccupancy(1, 3, 0));
}

TEST_CASE("lift_to_3d fills columns and clamps heights") {
  const VoxelConfig cfg{-51.2, 51.2, -51.2, 51.2, -5.0, 3.0, 0.2};
  BevOccupancy bev(cfg.nx(), cfg.ny(), 0);
  RealGrid2D heights(cfg.nx(), cfg.ny(), 0.0f);

  CHECK(lift_to_3d(bev, heights, cfg) == Occupancy3D(cfg.nx(), cfg.ny(), cfg.nz(), 0));

  bev.at(10, 10) = 1;
  heights.at(10, 10) = -3.4f;
  bev.at(20, 20) = 1;
  heights.at(20, 20) = 9.0f;  // above z_max: clamps to the full column
  const auto vol = lift_to_3d(bev, heights, cfg);
  for (int k = 0; k < cfg.nz(); ++k) {
    CHECK(vol.at(10, 10, k) == (k <= 7 ? 1 : 0));
    CHECK(vol.at(20, 20, k) == 1);
  }
}

TEST_CASE("refine_sequence reproduces ground truth from a perfect bundle") {
  const VoxelConfig cfg{-6.4, 6.4, -6.4, 6.4, -1.6, 1.6, 0.2};  // 64 x 64 x 16
  SceneSpec spec;
  spec.cfg = cfg;
  spec.n_past = 2;
  spec.n_future = 4;
  spec.frame_dt = 0.5;
  for (int a = 0; a < 2; ++a) {
    ActorSpec actor;
    actor.box.size = {1.6, 1.0, 1.2};
    actor.box.center = {a == 0 ? -2.5 : 2.5, a == 0 ? -1.0 : 1.5,
                        cfg.z_min + 0.5 * actor.box.size[2]};
    actor.box.yaw = a == 0 ? 0.3 : -1.2;
    actor.box.instance_id = static_cast<std::uint32_t>(a + 1);
    actor.vx = a == 0 ? 0.8 : -0.6;
    actor.vy = a == 0 ? 0.4 : -0.2;
    spec.actors.push_back(actor);
  }
  const auto frames = generate_scene(spec);
  const auto gt = generate_labels(frames.boxes, cfg, spec.n_past, spec.n_future);
  const auto pred = corrupt_predictions(gt, CorruptionSpec{}, cfg);

  const auto refined = refine_sequence(pred.bundle, pred.seg_prob_prev, {0.5, 2}, 0.5, cfg);
  REQUIRE(refined.bev.size() == 5);
  for (int t = 0; t <= spec.n_future; ++t) {
    CHECK(refined.bev[t] == gt.frame_at(t).occ_bev);
    CHECK(refined.volumes[t] == gt.frame_at(t).occ_fg);
  }
}

TEST_CASE("refine_sequence removes a spurious blob that lands on empty space") {
  const VoxelConfig cfg{-3.2, 3.2, -3.2, 3.2, -0.8, 0.8, 0.2};  // 32 x 32 x 8
  SceneSpec spec;
  spec.cfg = cfg;
  spec.n_past = 1;
  spec.n_future = 2;
  ActorSpec actor;
  actor.box.size = {1.2, 0.8, 0.8};
  actor.box.center = {-1.0, -1.0, cfg.z_min + 0.4};
  actor.vx = 0.5;
  spec.actors.push_back(actor);
  const auto frames = generate_scene(spec);
  const auto gt = generate_labels(frames.boxes, cfg, spec.n_past, spec.n_future);
  auto pred = corrupt_predictions(gt, CorruptionSpec{}, cfg);

  // Drop a fake detection into the last frame, away from the actor.
  for (int i = 24; i <= 26; ++i) {
    for (int j = 24; j <= 26; ++j) pred.bundle.initial_occ[2].at(i, j) = 0.9f;
  }
  const auto refined = refine_sequence(pred.bundle, pred.seg_prob_prev, {0.5, 2}, 0.5, cfg);
  for (int i = 24; i <= 26; ++i) {
    for (int j = 24; j <= 26; ++j) CHECK(refined.bev[2].at(i, j) == 0);
  }
  CHECK(refined.bev[2] == gt.frame_at(2).occ_bev);

  // Subset invariant: refinement never adds occupancy.
  for (int t = 0; t <= 2; ++t) {
    for (int i = 0; i < cfg.nx(); ++i) {
      for (int j = 0; j < cfg.ny(); ++j) {
        const bool init = pred.bundle.initial_occ[t].at(i, j) >= 0.5f;
        if (refined.bev[t].at(i, j)) CHECK(init);
      }
    }
  }

  // ID conservation: every nonzero output id exists in the t=-1 centers.
  const auto centers = extract_centers_nms(pred.seg_prob_prev, {0.5, 2});
  for (int t = 0; t <= 2; ++t) {
    for (const auto id : refined.instances[t].data()) {
      if (id == 0) continue;
      bool found = false;
      for (const auto& c : centers) found = found || c.instance_id == id;
      CHECK(found);
    }
  }
}

TEST_CASE("refine_sequence with no centers empties every frame") {
  const VoxelConfig cfg{-1.6, 1.6, -1.6, 1.6, -0.4, 0.4, 0.2};  // 16 x 16 x 4
  ForecastBundle bundle;
  for (int t = 0; t < 3; ++t) {
    bundle.initial_occ.push_back(RealGrid2D(16, 16, 0.9f));
    bundle.flows.push_back(FlowField(16, 16));
    bundle.heights.push_back(RealGrid2D(16, 16, 0.2f));
  }
  const auto refined = refine_sequence(bundle, zeros(16, 16), {0.5, 2}, 0.5, cfg);
  for (const auto& frame : refined.bev) {
    CHECK(frame == BevOccupancy(16, 16, 0));
  }
}
