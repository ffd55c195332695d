#pragma once

#include <vector>

#include "occgrid/grid.hpp"

namespace occgrid {

// Dense (c, h, w, l) feature tensor, channel outermost.
struct FeatureVolume {
  int channels = 0, rows = 0, cols = 0, layers = 0;
  std::vector<float> data;

  FeatureVolume() = default;
  FeatureVolume(int c, int h, int w, int l)
      : channels(c), rows(h), cols(w), layers(l),
        data(static_cast<std::size_t>(c) * h * w * l, 0.0f) {
    require(c > 0 && h > 0 && w > 0 && l > 0, "FeatureVolume dims must be positive");
  }

  float& at(int c, int i, int j, int k) {
    return data[((static_cast<std::size_t>(c) * rows + i) * cols + j) * layers + k];
  }
  const float& at(int c, int i, int j, int k) const {
    return data[((static_cast<std::size_t>(c) * rows + i) * cols + j) * layers + k];
  }

  bool operator==(const FeatureVolume&) const = default;
};

// Dense (c, h, w) BEV feature tensor.
struct BevFeature {
  int channels = 0, rows = 0, cols = 0;
  std::vector<float> data;

  BevFeature() = default;
  BevFeature(int c, int h, int w)
      : channels(c), rows(h), cols(w), data(static_cast<std::size_t>(c) * h * w, 0.0f) {
    require(c > 0 && h > 0 && w > 0, "BevFeature dims must be positive");
  }

  float& at(int c, int i, int j) {
    return data[(static_cast<std::size_t>(c) * rows + i) * cols + j];
  }
  const float& at(int c, int i, int j) const {
    return data[(static_cast<std::size_t>(c) * rows + i) * cols + j];
  }

  bool operator==(const BevFeature&) const = default;
};

// Mixing weights for the dual pooling reduction. Normalized to sum to 1
// inside the ops; both zero is rejected.
struct PoolWeights {
  double alpha_avg = 0.5;
  double alpha_max = 0.5;

  void validate() const {
    require(alpha_avg >= 0.0 && alpha_max >= 0.0, "PoolWeights: weights must be non-negative");
    require(alpha_avg + alpha_max > 0.0, "PoolWeights: at least one weight must be positive");
  }
};

// Column mean along z.
BevFeature avg_pool_z(const FeatureVolume& vol);
// Column max along z.
BevFeature max_pool_z(const FeatureVolume& vol);
// Convex combination of the two poolings with normalized weights.
BevFeature adaptive_dual_pool(const FeatureVolume& vol, const PoolWeights& w);

// Nearest-neighbor resampling of a BEV grid into the present frame. Each
// output cell center is pulled back through the pose into the source
// frame; out-of-range samples take the background value.
BevFeature warp_to_present(const BevFeature& grid, const Pose2D& pose, const VoxelConfig& cfg);
BevOccupancy warp_to_present(const BevOccupancy& grid, const Pose2D& pose, const VoxelConfig& cfg);
InstanceMap warp_to_present(const InstanceMap& grid, const Pose2D& pose, const VoxelConfig& cfg);

// Warps each frame of [-n_past, 0] to the present and stacks them in
// chronological order: result index 0 is the oldest frame.
std::vector<BevFeature> aggregate_frames(const std::vector<BevFeature>& feats,
                                         const std::vector<Pose2D>& poses,
                                         const VoxelConfig& cfg);

}  // namespace occgrid
