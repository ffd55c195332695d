#pragma once

#include <vector>

#include "occgrid/grid.hpp"

namespace occgrid {

// Instance peak extracted from a probability grid.
struct InstanceCenter {
  int row = 0;
  int col = 0;
  double score = 0.0;
  std::uint32_t instance_id = 0;

  bool operator==(const InstanceCenter&) const = default;
};

struct NmsParams {
  double threshold = 0.5;
  int radius = 2;
};

// Forecast-head outputs for t in [0, n_future]: occupancy probabilities,
// backward centripetal flow, and a dense height estimate per frame.
struct ForecastBundle {
  std::vector<RealGrid2D> initial_occ;
  std::vector<FlowField> flows;
  std::vector<RealGrid2D> heights;

  int frame_count() const { return static_cast<int>(initial_occ.size()); }
  void validate() const;
};

struct RefinedSequence {
  std::vector<BevOccupancy> bev;
  std::vector<InstanceMap> instances;
  std::vector<Occupancy3D> volumes;
};

// Peaks are cells at or above the score threshold that strictly dominate
// every neighbor closer than `radius` in Chebyshev distance; equal-valued
// neighbors lose to the lexicographically smaller (row, col). IDs count
// 1,2,3,... in descending-score order, ties by position.
std::vector<InstanceCenter> extract_centers_nms(const RealGrid2D& seg_prob,
                                                const NmsParams& params);

// One association step of the temporal decoupling. Each occupied pixel
// follows its flow to a landing point in the previous frame; pixels whose
// landing falls off the grid or on previous-frame background drop to 0,
// the rest take the ID of the nearest previous center (ties toward the
// smaller ID). Landing points round half away from zero per component.
InstanceMap associate_step(const std::vector<InstanceCenter>& centers_prev,
                           const InstanceMap& prev_ids, const FlowField& flow_t,
                           const BevOccupancy& occ_t);

// min(ID, 1) per cell.
BevOccupancy clip_mask(const InstanceMap& m);

// (initial >= threshold) AND mask, cellwise.
BevOccupancy refine_occupancy(const RealGrid2D& initial, const BevOccupancy& mask,
                              double binarize_threshold);

// Lifts refined BEV occupancy to 3D with the predicted heights; heights
// are clamped into the lattice's z range first, and every occupied cell
// yields at least one voxel.
Occupancy3D lift_to_3d(const BevOccupancy& bev, const RealGrid2D& heights,
                       const VoxelConfig& cfg);

// Assigns every thresholded pixel to its nearest center. This is the
// instance segmentation of the observed frame that seeds the propagation.
InstanceMap segment_by_centers(const RealGrid2D& seg_prob,
                               const std::vector<InstanceCenter>& centers,
                               double binarize_threshold);

// Full refinement pass: NMS at t=-1, step-wise ID propagation over the
// horizon with per-step centroid updates, CLIP masking, and height lifting.
RefinedSequence refine_sequence(const ForecastBundle& bundle, const RealGrid2D& seg_prob_prev,
                                const NmsParams& nms, double binarize_threshold,
                                const VoxelConfig& cfg);

}  // namespace occgrid
