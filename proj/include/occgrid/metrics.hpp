#pragma once

#include <cstdint>
#include <vector>

#include "occgrid/grid.hpp"
#include "occgrid/labelgen.hpp"

namespace occgrid {

// Per-frame voxel tallies. fp_in_box counts the false positives whose
// voxel centers fall inside an annotated box.
struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;
  std::int64_t fp_in_box = 0;
};

// Inclusive frame window [t_start, t_end] over the forecast horizon.
struct EvalWindow {
  int t_start = 0;
  int t_end = 0;

  int n_all() const { return t_end - t_start + 1; }
  void validate() const { require(t_start <= t_end, "EvalWindow: t_start > t_end"); }

  static EvalWindow current() { return {0, 0}; }
  static EvalWindow future(int n_future) { return {1, n_future}; }
  static EvalWindow all(int n_future) { return {0, n_future}; }
};

enum class CiouMode {
  kLiteral,          // (tp + fpb) / (tp + fn + (fp - fpb)); can exceed 1
  kUnionConsistent,  // (tp + fpb) / (tp + fn + fp); bounded by 1
};

struct CiouResult {
  double value = 0.0;
  int skipped_frames = 0;  // literal-mode frames with zero denominator and nonzero numerator
};

struct IouTriple {
  double current = 0.0;
  double future = 0.0;
  double all = 0.0;
};

struct CiouTriple {
  double current = 0.0;
  double future = 0.0;
  double all = 0.0;
  int skipped_current = 0;
  int skipped_future = 0;
  int skipped_all = 0;
};

struct MetricsReport {
  IouTriple iou_bb;
  IouTriple iou_fg;
  CiouTriple ciou;
  double vpq_bb = 0.0;
  double vpq_fg = 0.0;
};

struct EvalParams {
  double vpq_match_threshold = 0.5;
  bool vpq_normalize = true;  // divide the frame sum by the window length
  CiouMode ciou_mode = CiouMode::kLiteral;
};

ConfusionCounts confusion(const Occupancy3D& gt, const Occupancy3D& pred,
                          const std::vector<Box3D>& boxes, const VoxelConfig& cfg);

// Single-frame C-IoU term; exposed for tests and the report assembly.
// Returns {value, 1} when the frame is skipped.
CiouResult ciou_frame(const ConfusionCounts& c, CiouMode mode);

// Windowed mean of per-frame intersection-over-union. A frame where both
// grids are empty scores 1.
double iou_window(const std::vector<Occupancy3D>& gt_seq,
                  const std::vector<Occupancy3D>& pred_seq, const EvalWindow& window);
double iou_window(const std::vector<BevOccupancy>& gt_seq,
                  const std::vector<BevOccupancy>& pred_seq, const EvalWindow& window);

CiouResult c_iou_window(const std::vector<Occupancy3D>& gt_fg_seq,
                        const std::vector<Occupancy3D>& pred_seq,
                        const std::vector<std::vector<Box3D>>& boxes_per_frame,
                        const EvalWindow& window, const VoxelConfig& cfg,
                        CiouMode mode = CiouMode::kLiteral);

// Video panoptic quality over instance-labeled volumes. A prediction is a
// true positive when its volume IoU against a ground-truth instance
// exceeds match_threshold and the pairing is consistent with the matches
// recorded in earlier window frames.
double vpq(const std::vector<Grid3D<std::uint32_t>>& gt_inst_seq,
           const std::vector<Grid3D<std::uint32_t>>& pred_inst_seq, const EvalWindow& window,
           double match_threshold = 0.5, bool normalize = true);

// Lifts a BEV instance map into an instance-labeled volume with the
// paired height map (columns filled from the lattice bottom).
Grid3D<std::uint32_t> lift_instances(const InstanceMap& instances, const HeightMap& heights,
                                     const VoxelConfig& cfg);
// Same with a dense height grid; heights are clamped into the z range.
Grid3D<std::uint32_t> lift_instances(const InstanceMap& instances, const RealGrid2D& heights,
                                     const VoxelConfig& cfg);

// All report fields over the forecast horizon [0, n_future].
MetricsReport evaluate_sequence(const LabeledSequence& gt,
                                const std::vector<Occupancy3D>& pred_3d_seq,
                                const std::vector<Grid3D<std::uint32_t>>& pred_inst_seq,
                                const VoxelConfig& cfg, const EvalParams& params = {});

}  // namespace occgrid
