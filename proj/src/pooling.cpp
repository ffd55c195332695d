#include "occgrid/pooling.hpp"

#include <algorithm>

namespace occgrid {

BevFeature avg_pool_z(const FeatureVolume& vol) {
  require(vol.layers >= 1, "avg_pool_z: needs at least one layer");
  BevFeature out(vol.channels, vol.rows, vol.cols);
#pragma omp parallel for schedule(static) collapse(2)
  for (int c = 0; c < vol.channels; ++c) {
    for (int i = 0; i < vol.rows; ++i) {
      for (int j = 0; j < vol.cols; ++j) {
        double sum = 0.0;
        for (int k = 0; k < vol.layers; ++k) sum += vol.at(c, i, j, k);
        out.at(c, i, j) = static_cast<float>(sum / vol.layers);
      }
    }
  }
  return out;
}

BevFeature max_pool_z(const FeatureVolume& vol) {
  require(vol.layers >= 1, "max_pool_z: needs at least one layer");
  BevFeature out(vol.channels, vol.rows, vol.cols);
#pragma omp parallel for schedule(static) collapse(2)
  for (int c = 0; c < vol.channels; ++c) {
    for (int i = 0; i < vol.rows; ++i) {
      for (int j = 0; j < vol.cols; ++j) {
        float best = vol.at(c, i, j, 0);
        for (int k = 1; k < vol.layers; ++k) best = std::max(best, vol.at(c, i, j, k));
        out.at(c, i, j) = best;
      }
    }
  }
  return out;
}

BevFeature adaptive_dual_pool(const FeatureVolume& vol, const PoolWeights& w) {
  w.validate();
  // Degenerate weights reproduce the single-pool results bitwise.
  if (w.alpha_max == 0.0) return avg_pool_z(vol);
  if (w.alpha_avg == 0.0) return max_pool_z(vol);
  const double sum = w.alpha_avg + w.alpha_max;
  const double a = w.alpha_avg / sum;
  const double b = w.alpha_max / sum;
  const BevFeature avg = avg_pool_z(vol);
  const BevFeature mx = max_pool_z(vol);
  BevFeature out(vol.channels, vol.rows, vol.cols);
#pragma omp parallel for schedule(static)
  for (long long n = 0; n < static_cast<long long>(out.data.size()); ++n) {
    out.data[n] = static_cast<float>(a * avg.data[n] + b * mx.data[n]);
  }
  return out;
}

namespace {

template <typename GridT, typename CellT>
GridT warp_cells(const GridT& grid, const Pose2D& pose, const VoxelConfig& cfg,
                 CellT background) {
  require(grid.rows() == cfg.nx() && grid.cols() == cfg.ny(),
          "warp_to_present: grid dims differ from config");
  GridT out(grid.rows(), grid.cols(), background);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < grid.rows(); ++i) {
    for (int j = 0; j < grid.cols(); ++j) {
      const auto center = index_to_center_2d({i, j}, cfg);
      const auto src = pose.apply_inverse(center[0], center[1]);
      const auto idx = world_to_index_2d(src[0], src[1], cfg);
      out.at(i, j) = idx ? grid.at(idx->i, idx->j) : background;
    }
  }
  return out;
}

}  // namespace

BevFeature warp_to_present(const BevFeature& grid, const Pose2D& pose, const VoxelConfig& cfg) {
  require(grid.rows == cfg.nx() && grid.cols == cfg.ny(),
          "warp_to_present: grid dims differ from config");
  BevFeature out(grid.channels, grid.rows, grid.cols);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < grid.rows; ++i) {
    for (int j = 0; j < grid.cols; ++j) {
      const auto center = index_to_center_2d({i, j}, cfg);
      const auto src = pose.apply_inverse(center[0], center[1]);
      const auto idx = world_to_index_2d(src[0], src[1], cfg);
      for (int c = 0; c < grid.channels; ++c) {
        out.at(c, i, j) = idx ? grid.at(c, idx->i, idx->j) : 0.0f;
      }
    }
  }
  return out;
}

BevOccupancy warp_to_present(const BevOccupancy& grid, const Pose2D& pose, const VoxelConfig& cfg) {
  return warp_cells(grid, pose, cfg, static_cast<std::uint8_t>(0));
}

InstanceMap warp_to_present(const InstanceMap& grid, const Pose2D& pose, const VoxelConfig& cfg) {
  return warp_cells(grid, pose, cfg, static_cast<std::uint32_t>(0));
}

std::vector<BevFeature> aggregate_frames(const std::vector<BevFeature>& feats,
                                         const std::vector<Pose2D>& poses,
                                         const VoxelConfig& cfg) {
  require(!feats.empty(), "aggregate_frames: no frames");
  require(feats.size() == poses.size(), "aggregate_frames: feats and poses length mismatch");
  std::vector<BevFeature> stacked;
  stacked.reserve(feats.size());
  for (std::size_t n = 0; n < feats.size(); ++n) {
    require(feats[n].channels == feats[0].channels && feats[n].rows == feats[0].rows &&
                feats[n].cols == feats[0].cols,
            "aggregate_frames: inconsistent feature dims");
    stacked.push_back(warp_to_present(feats[n], poses[n], cfg));
  }
  return stacked;
}

}  // namespace occgrid
