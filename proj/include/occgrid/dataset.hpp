#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "occgrid/grid_io.hpp"
#include "occgrid/labelgen.hpp"
#include "occgrid/metrics.hpp"
#include "occgrid/refine.hpp"
#include "occgrid/sim.hpp"

namespace occgrid {

// On-disk layout shared by the CLI subcommands. Every directory carries a
// manifest.json with the voxel config and horizon; grids use the SGRD
// container, box lists and poses plain JSON.

inline constexpr char kManifestName[] = "manifest.json";

struct Manifest {
  std::string kind;  // "labels", "predictions", or "refined"
  VoxelConfig cfg;
  int n_past = 0;
  int n_future = 0;
};

void write_manifest(const std::filesystem::path& dir, const Manifest& m);
Manifest read_manifest(const std::filesystem::path& dir);

// Frame file suffix for a frame offset, e.g. t = -2 -> "m2", t = 3 -> "p3".
std::string frame_tag(int t);

void write_boxes_file(const std::filesystem::path& path,
                      const std::vector<std::vector<Box3D>>& boxes_per_frame, int n_past,
                      int n_future);
// Returns boxes per frame and fills the horizon outputs.
std::vector<std::vector<Box3D>> read_boxes_file(const std::filesystem::path& path, int& n_past,
                                                int& n_future);

void write_poses_file(const std::filesystem::path& path, const std::vector<Pose2D>& poses,
                      int n_past);
std::vector<Pose2D> read_poses_file(const std::filesystem::path& path);

void write_labels_dir(const std::filesystem::path& dir, const LabeledSequence& seq,
                      const VoxelConfig& cfg);
LabeledSequence read_labels_dir(const std::filesystem::path& dir, VoxelConfig& cfg);

void write_predictions_dir(const std::filesystem::path& dir, const CorruptedPredictions& pred,
                           const VoxelConfig& cfg, int n_past, int n_future);
CorruptedPredictions read_predictions_dir(const std::filesystem::path& dir, VoxelConfig& cfg,
                                          int& n_past, int& n_future);

void write_refined_dir(const std::filesystem::path& dir, const RefinedSequence& refined,
                       const std::vector<RealGrid2D>& pred_heights, const VoxelConfig& cfg,
                       int n_past, int n_future);
struct RefinedOnDisk {
  RefinedSequence refined;
  std::vector<RealGrid2D> heights;
};
RefinedOnDisk read_refined_dir(const std::filesystem::path& dir, VoxelConfig& cfg,
                               int& n_future);

// Sorted relative-path -> SHA-256 map over the regular files of a
// directory tree; feeds the report provenance block.
nlohmann::json digest_directory(const std::filesystem::path& dir);

}  // namespace occgrid
