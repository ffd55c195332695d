#pragma once

#include <vector>

#include "occgrid/grid.hpp"

namespace occgrid {

// Ground-truth grids of one frame. occ_bb is the box envelope, occ_fg the
// height-lifted fine-grained grid, both over the same lattice.
struct LabeledFrame {
  Occupancy3D occ_bb;
  BevOccupancy occ_bev;
  HeightMap heights;
  Occupancy3D occ_fg;
  InstanceMap instances;
};

// Frames cover t in [-n_past, n_future]; flows cover t in [0, n_future],
// each taken against the previous frame's instance map.
struct LabeledSequence {
  std::vector<LabeledFrame> frames;
  std::vector<FlowField> flows;
  std::vector<std::vector<Box3D>> boxes;
  int n_past = 0;
  int n_future = 0;

  int frame_count() const { return n_past + n_future + 1; }
  // t is the frame offset relative to the present frame (t=0).
  const LabeledFrame& frame_at(int t) const { return frames[n_past + t]; }
  const std::vector<Box3D>& boxes_at(int t) const { return boxes[n_past + t]; }
};

// Marks every voxel whose center lies inside at least one yaw-rotated box
// (inclusive faces). Boxes outside the range contribute nothing.
Occupancy3D rasterize_boxes_3d(const std::vector<Box3D>& boxes,
                               const VoxelConfig& cfg);

// BEV footprint rasterization; overlaps resolve to the smaller instance_id.
InstanceMap rasterize_instances_bev(const std::vector<Box3D>& boxes,
                                    const VoxelConfig& cfg);

// 3D counterpart used by the instance-level metrics: voxel gets the
// smallest instance_id among boxes containing its center.
Grid3D<std::uint32_t> rasterize_instances_3d(const std::vector<Box3D>& boxes,
                                             const VoxelConfig& cfg);

// Logical OR along z per column.
BevOccupancy compress_to_bev(const Occupancy3D& occ);

// Height of the top face of the highest occupied voxel per column:
// z_min + (k_max + 1) * resolution. Empty columns stay undefined.
HeightMap extract_heights(const Occupancy3D& occ, const VoxelConfig& cfg);

// Lifts BEV occupancy back to 3D by filling each occupied column from
// base_k up to round((height - z_min)/resolution) - 1, clamped to the
// lattice. Throws InvariantError when the height mask and bev disagree.
Occupancy3D build_fine_grained(const BevOccupancy& bev, const HeightMap& heights,
                               const VoxelConfig& cfg, int base_k = 0);

// Backward centripetal flow: each labeled pixel at time t points to the
// centroid of its instance at t-1. Pixels of unmatched or background
// labels carry the zero vector.
FlowField gt_backward_flow(const InstanceMap& inst_t, const InstanceMap& inst_prev);

// Full label pipeline over a box sequence of n_past + n_future + 1 frames.
LabeledSequence generate_labels(const std::vector<std::vector<Box3D>>& boxes_per_frame,
                                const VoxelConfig& cfg, int n_past, int n_future);

}  // namespace occgrid
