#pragma once

#include <cstdint>
#include <vector>

#include "occgrid/grid.hpp"
#include "occgrid/labelgen.hpp"
#include "occgrid/refine.hpp"

namespace occgrid {

// Constant-velocity, constant-yaw-rate actor. The box holds the state at
// the first frame of the sequence (t = -n_past).
struct ActorSpec {
  Box3D box;
  double vx = 0.0;
  double vy = 0.0;
  double yaw_rate = 0.0;

  void validate() const;
};

struct SceneSpec {
  std::vector<ActorSpec> actors;
  double ego_vx = 0.0;
  double ego_vy = 0.0;
  double frame_dt = 0.5;
  int n_past = 2;
  int n_future = 4;
  VoxelConfig cfg;
  std::uint64_t seed = 0;  // reserved for randomized scene construction

  void validate() const;
  int frame_count() const { return n_past + n_future + 1; }
};

// Box lists are expressed in the present (t=0) coordinate frame; the
// poses map each frame's ego-local coordinates into that frame and exist
// for the feature-aggregation path.
struct SceneFrames {
  std::vector<std::vector<Box3D>> boxes;
  std::vector<Pose2D> poses;
};

struct CorruptionSpec {
  double occ_flip_rate = 0.0;
  double flow_noise_sigma = 0.0;    // grid cells
  double height_noise_sigma = 0.0;  // meters
  int spurious_blob_count = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct CorruptedPredictions {
  ForecastBundle bundle;       // frames t in [0, n_future]
  RealGrid2D seg_prob_prev;    // observed-frame segmentation at t = -1
};

SceneFrames generate_scene(const SceneSpec& spec);

// Turns ground-truth labels into pseudo network outputs: occupancy flips
// mapped to {0.1, 0.9} pseudo-probabilities, Gaussian noise on flow and
// heights, and 3x3 spurious blobs dropped into random forecast frames.
// Draws follow a fixed frame-major, row-major order off a seeded
// mt19937_64, so a given spec always produces the same bundle.
CorruptedPredictions corrupt_predictions(const LabeledSequence& gt, const CorruptionSpec& c,
                                         const VoxelConfig& cfg);

// Deterministic randomized scene for stress tests: `n_actors` separated
// box actors with bounded speeds, all reaching the lattice floor and
// staying inside the grid over the whole sequence.
SceneSpec make_random_scene(const VoxelConfig& cfg, int n_past, int n_future, double frame_dt,
                            int n_actors, std::uint64_t seed);

}  // namespace occgrid
