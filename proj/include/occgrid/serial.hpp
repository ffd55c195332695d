#pragma once

#include <vector>

#include "occgrid/grid.hpp"
#include "occgrid/labelgen.hpp"
#include "occgrid/metrics.hpp"
#include "occgrid/pooling.hpp"
#include "occgrid/refine.hpp"

// Single-threaded reference implementations of the parallel kernels.
// They follow the same cell-visit and accumulation order as the OpenMP
// versions, so results must match bitwise; tests and the benchmark
// target compare the two.
namespace occgrid::serial {

Occupancy3D rasterize_boxes_3d(const std::vector<Box3D>& boxes, const VoxelConfig& cfg);
InstanceMap rasterize_instances_bev(const std::vector<Box3D>& boxes, const VoxelConfig& cfg);
BevOccupancy compress_to_bev(const Occupancy3D& occ);
HeightMap extract_heights(const Occupancy3D& occ, const VoxelConfig& cfg);
Occupancy3D build_fine_grained(const BevOccupancy& bev, const HeightMap& heights,
                               const VoxelConfig& cfg, int base_k = 0);
FlowField gt_backward_flow(const InstanceMap& inst_t, const InstanceMap& inst_prev);

BevFeature avg_pool_z(const FeatureVolume& vol);
BevFeature max_pool_z(const FeatureVolume& vol);
BevFeature adaptive_dual_pool(const FeatureVolume& vol, const PoolWeights& w);
BevOccupancy warp_to_present(const BevOccupancy& grid, const Pose2D& pose,
                             const VoxelConfig& cfg);

std::vector<InstanceCenter> extract_centers_nms(const RealGrid2D& seg_prob,
                                                const NmsParams& params);
InstanceMap associate_step(const std::vector<InstanceCenter>& centers_prev,
                           const InstanceMap& prev_ids, const FlowField& flow_t,
                           const BevOccupancy& occ_t);

ConfusionCounts confusion(const Occupancy3D& gt, const Occupancy3D& pred,
                          const std::vector<Box3D>& boxes, const VoxelConfig& cfg);

double bce_loss(const RealGrid2D& pred_prob, const BevOccupancy& gt);
double smooth_l1_loss(const RealGrid2D& pred, const RealGrid2D& gt,
                      const BevOccupancy& valid_mask, double beta = 1.0);

}  // namespace occgrid::serial
