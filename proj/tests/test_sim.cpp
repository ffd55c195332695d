#include <doctest.h>

#include <set>

#include "occgrid/labelgen.hpp"
#include "occgrid/sim.hpp"

using namespace occgrid;

namespace {

VoxelConfig grid32() {
  return {-3.2, 3.2, -3.2, 3.2, -0.8, 0.8, 0.2};
}

SceneSpec one_actor_scene() {
  SceneSpec spec;
  spec.cfg = grid32();
  spec.n_past = 2;
  spec.n_future = 4;
  spec.frame_dt = 0.5;
  ActorSpec actor;
  actor.box.size = {1.0, 0.6, 0.8};
  actor.box.center = {-2.0, 0.0, spec.cfg.z_min + 0.4};
  spec.actors.push_back(actor);
  return spec;
}

}  // namespace

TEST_CASE("generate_scene: zero velocities give identical frames, identity poses") {
  const auto spec = one_actor_scene();
  const auto frames = generate_scene(spec);
  REQUIRE(frames.boxes.size() == 7);
  REQUIRE(frames.poses.size() == 7);
  for (int n = 0; n < 7; ++n) {
    CHECK(frames.boxes[n][0].center == frames.boxes[0][0].center);
    CHECK(frames.poses[n] == Pose2D::identity());
  }
}

TEST_CASE("generate_scene: constant velocity advances one meter per frame") {
  auto spec = one_actor_scene();
  // Wider lattice so the mover stays in range over all seven frames.
  spec.cfg = VoxelConfig{-12.8, 12.8, -12.8, 12.8, -0.8, 0.8, 0.2};
  spec.actors[0].box.center = {-4.0, 0.0, spec.cfg.z_min + 0.4};
  spec.actors[0].vx = 2.0;  // 2 m/s * 0.5 s = 1 m = 5 cells at 0.2 m
  const auto frames = generate_scene(spec);
  for (int n = 1; n < 7; ++n) {
    CHECK(frames.boxes[n][0].center[0] - frames.boxes[n - 1][0].center[0] ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
  // The rasterized footprint shifts five rows per frame.
  const auto inst_a = rasterize_instances_bev(frames.boxes[0], spec.cfg);
  const auto inst_b = rasterize_instances_bev(frames.boxes[1], spec.cfg);
  for (int i = 0; i < inst_a.rows() - 5; ++i) {
    for (int j = 0; j < inst_a.cols(); ++j) {
      CHECK(inst_b.at(i + 5, j) == inst_a.at(i, j));
    }
  }

  // Lattice-aligned motion keeps the rigid body's voxel count constant.
  const auto gt = generate_labels(frames.boxes, spec.cfg, spec.n_past, spec.n_future);
  std::vector<std::int64_t> counts;
  for (const auto& f : gt.frames) {
    std::int64_t c = 0;
    for (const auto v : f.occ_bb.data()) c += v;
    counts.push_back(c);
  }
  for (const auto c : counts) CHECK(c == counts[0]);
  CHECK(counts[0] > 0);

  // The mean centripetal flow over an instance is the negated per-frame
  // centroid displacement: -5 rows here.
  for (int t = 0; t <= spec.n_future; ++t) {
    const auto& inst = gt.frame_at(t).instances;
    double sum_dr = 0.0, sum_dc = 0.0;
    std::int64_t n = 0;
    for (int i = 0; i < inst.rows(); ++i) {
      for (int j = 0; j < inst.cols(); ++j) {
        if (!inst.at(i, j)) continue;
        sum_dr += gt.flows[t].d_row.at(i, j);
        sum_dc += gt.flows[t].d_col.at(i, j);
        ++n;
      }
    }
    REQUIRE(n > 0);
    CHECK(sum_dr / n == doctest::Approx(-5.0).epsilon(1e-6));
    CHECK(sum_dc / n == doctest::Approx(0.0).epsilon(1e-6));
  }
}

TEST_CASE("generate_scene: ego motion produces frame-to-present translations") {
  auto spec = one_actor_scene();
  spec.ego_vx = 1.0;
  const auto frames = generate_scene(spec);
  CHECK(frames.poses[2] == Pose2D::identity());  // the present frame
  CHECK(frames.poses[0].tx == doctest::Approx(-1.0));
  CHECK(frames.poses[6].tx == doctest::Approx(2.0));
}

TEST_CASE("generate_scene is deterministic") {
  auto spec = one_actor_scene();
  spec.actors[0].vx = 1.3;
  spec.actors[0].yaw_rate = 0.1;
  const auto a = generate_scene(spec);
  const auto b = generate_scene(spec);
  for (int n = 0; n < spec.frame_count(); ++n) {
    CHECK(a.boxes[n][0].center == b.boxes[n][0].center);
    CHECK(a.boxes[n][0].yaw == b.boxes[n][0].yaw);
    CHECK(a.poses[n] == b.poses[n]);
  }
}

TEST_CASE("corrupt_predictions: zero corruption reproduces GT after thresholding") {
  const auto spec = one_actor_scene();
  const auto frames = generate_scene(spec);
  const auto gt = generate_labels(frames.boxes, spec.cfg, spec.n_past, spec.n_future);
  const auto pred = corrupt_predictions(gt, CorruptionSpec{}, spec.cfg);

  REQUIRE(pred.bundle.frame_count() == 5);
  pred.bundle.validate();
  for (int t = 0; t <= 4; ++t) {
    const auto& probs = pred.bundle.initial_occ[t];
    const auto& bev = gt.frame_at(t).occ_bev;
    for (int i = 0; i < probs.rows(); ++i) {
      for (int j = 0; j < probs.cols(); ++j) {
        CHECK(probs.at(i, j) == (bev.at(i, j) ? 0.9f : 0.1f));
      }
    }
    CHECK(pred.bundle.flows[t] == gt.flows[t]);
    for (int i = 0; i < probs.rows(); ++i) {
      for (int j = 0; j < probs.cols(); ++j) {
        if (const auto h = gt.frame_at(t).heights.get(i, j)) {
          CHECK(pred.bundle.heights[t].at(i, j) == *h);
        } else {
          CHECK(pred.bundle.heights[t].at(i, j) == static_cast<float>(spec.cfg.z_min));
        }
      }
    }
  }
}

TEST_CASE("corrupt_predictions: one blob adds exactly nine hot cells to one frame") {
  SceneSpec spec = one_actor_scene();
  spec.actors.clear();  // empty scene isolates the injection
  const auto frames = generate_scene(spec);
  const auto gt = generate_labels(frames.boxes, spec.cfg, spec.n_past, spec.n_future);
  CorruptionSpec c;
  c.spurious_blob_count = 1;
  c.seed = 11;
  const auto pred = corrupt_predictions(gt, c, spec.cfg);

  int hot_frames = 0;
  for (int t = 0; t <= spec.n_future; ++t) {
    std::int64_t hot = 0;
    for (const auto v : pred.bundle.initial_occ[t].data()) hot += v >= 0.5f ? 1 : 0;
    if (hot > 0) {
      ++hot_frames;
      CHECK(hot == 9);
    }
  }
  CHECK(hot_frames == 1);
}

TEST_CASE("corrupt_predictions: flip rate flips roughly that fraction") {
  const auto spec = one_actor_scene();
  const auto frames = generate_scene(spec);
  const auto gt = generate_labels(frames.boxes, spec.cfg, spec.n_past, spec.n_future);
  CorruptionSpec c;
  c.occ_flip_rate = 0.25;
  c.seed = 5;
  const auto pred = corrupt_predictions(gt, c, spec.cfg);
  std::int64_t flipped = 0, total = 0;
  for (int t = 0; t <= spec.n_future; ++t) {
    const auto& bev = gt.frame_at(t).occ_bev;
    for (int i = 0; i < bev.rows(); ++i) {
      for (int j = 0; j < bev.cols(); ++j) {
        const bool hot = pred.bundle.initial_occ[t].at(i, j) >= 0.5f;
        flipped += hot != (bev.at(i, j) != 0) ? 1 : 0;
        ++total;
      }
    }
  }
  const double rate = static_cast<double>(flipped) / total;
  CHECK(rate > 0.2);
  CHECK(rate < 0.3);
}

TEST_CASE("corrupt_predictions is deterministic per seed") {
  const auto spec = one_actor_scene();
  const auto frames = generate_scene(spec);
  const auto gt = generate_labels(frames.boxes, spec.cfg, spec.n_past, spec.n_future);
  CorruptionSpec c;
  c.occ_flip_rate = 0.1;
  c.flow_noise_sigma = 0.5;
  c.height_noise_sigma = 0.1;
  c.spurious_blob_count = 2;
  c.seed = 99;
  const auto a = corrupt_predictions(gt, c, spec.cfg);
  const auto b = corrupt_predictions(gt, c, spec.cfg);
  CHECK(a.seg_prob_prev == b.seg_prob_prev);
  for (int t = 0; t <= spec.n_future; ++t) {
    CHECK(a.bundle.initial_occ[t] == b.bundle.initial_occ[t]);
    CHECK(a.bundle.flows[t] == b.bundle.flows[t]);
    CHECK(a.bundle.heights[t] == b.bundle.heights[t]);
  }
  c.seed = 100;
  const auto d = corrupt_predictions(gt, c, spec.cfg);
  CHECK(a.bundle.initial_occ[0] != d.bundle.initial_occ[0]);
}

TEST_CASE("corruption spec validation") {
  CorruptionSpec c;
  c.occ_flip_rate = 1.5;
  CHECK_THROWS_AS(c.validate(), InvariantError);
  c = CorruptionSpec{};
  c.flow_noise_sigma = -1.0;
  CHECK_THROWS_AS(c.validate(), InvariantError);
  c = CorruptionSpec{};
  c.spurious_blob_count = -2;
  CHECK_THROWS_AS(c.validate(), InvariantError);
}

TEST_CASE("make_random_scene: actors stay inside the grid and apart") {
  const VoxelConfig cfg{-6.4, 6.4, -6.4, 6.4, -0.8, 0.8, 0.2};  // 64 x 64 x 8
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto spec = make_random_scene(cfg, 2, 4, 0.5, 3, seed);
    CHECK(spec.actors.size() == 3);
    const auto frames = generate_scene(spec);
    for (const auto& frame : frames.boxes) {
      for (const auto& box : frame) {
        CHECK(box.center[0] > cfg.x_min);
        CHECK(box.center[0] < cfg.x_max);
        CHECK(box.center[1] > cfg.y_min);
        CHECK(box.center[1] < cfg.y_max);
      }
    }
    // Footprints never overlap: the BEV instance map keeps every id.
    for (const auto& frame : frames.boxes) {
      const auto inst = rasterize_instances_bev(frame, cfg);
      std::set<std::uint32_t> seen;
      for (const auto id : inst.data()) {
        if (id) seen.insert(id);
      }
      CHECK(seen.size() == 3);
    }
  }
}
