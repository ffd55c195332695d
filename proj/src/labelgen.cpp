#include "occgrid/labelgen.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace occgrid {

namespace {

struct CellRange {
  int i_lo, i_hi, j_lo, j_hi;  // inclusive
  bool empty() const { return i_lo > i_hi || j_lo > j_hi; }
};

int clamp_cell(double u, int cells) {
  return std::clamp(static_cast<int>(std::floor(u)), 0, cells - 1);
}

// Conservative index-space bounding rectangle of a yaw-rotated footprint,
// padded by one cell so face-touching centers are never missed.
CellRange footprint_range(const Box3D& box, const VoxelConfig& cfg) {
  const double c = std::abs(std::cos(box.yaw));
  const double s = std::abs(std::sin(box.yaw));
  const double ex = 0.5 * (c * box.size[0] + s * box.size[1]);
  const double ey = 0.5 * (s * box.size[0] + c * box.size[1]);
  CellRange r{};
  if (box.center[0] + ex < cfg.x_min || box.center[0] - ex >= cfg.x_max ||
      box.center[1] + ey < cfg.y_min || box.center[1] - ey >= cfg.y_max) {
    return CellRange{1, 0, 1, 0};
  }
  r.i_lo = clamp_cell((box.center[0] - ex - cfg.x_min) / cfg.resolution - 1.0, cfg.nx());
  r.i_hi = clamp_cell((box.center[0] + ex - cfg.x_min) / cfg.resolution + 1.0, cfg.nx());
  r.j_lo = clamp_cell((box.center[1] - ey - cfg.y_min) / cfg.resolution - 1.0, cfg.ny());
  r.j_hi = clamp_cell((box.center[1] + ey - cfg.y_min) / cfg.resolution + 1.0, cfg.ny());
  return r;
}

struct LayerRange {
  int k_lo, k_hi;  // inclusive
  bool empty() const { return k_lo > k_hi; }
};

LayerRange layer_range(const Box3D& box, const VoxelConfig& cfg) {
  const double z_lo = box.center[2] - 0.5 * box.size[2];
  const double z_hi = box.center[2] + 0.5 * box.size[2];
  if (z_hi < cfg.z_min || z_lo >= cfg.z_max) return LayerRange{1, 0};
  LayerRange r{};
  r.k_lo = clamp_cell((z_lo - cfg.z_min) / cfg.resolution - 1.0, cfg.nz());
  r.k_hi = clamp_cell((z_hi - cfg.z_min) / cfg.resolution + 1.0, cfg.nz());
  return r;
}

}  // namespace

Occupancy3D rasterize_boxes_3d(const std::vector<Box3D>& boxes, const VoxelConfig& cfg) {
  cfg.validate();
  Occupancy3D occ(cfg.nx(), cfg.ny(), cfg.nz(), 0);
  for (const auto& box : boxes) {
    box.validate();
    const CellRange fr = footprint_range(box, cfg);
    const LayerRange lr = layer_range(box, cfg);
    if (fr.empty() || lr.empty()) continue;
#pragma omp parallel for schedule(static)
    for (int i = fr.i_lo; i <= fr.i_hi; ++i) {
      for (int j = fr.j_lo; j <= fr.j_hi; ++j) {
        const auto cxy = index_to_center_2d({i, j}, cfg);
        if (!box.footprint_contains(cxy[0], cxy[1])) continue;
        for (int k = lr.k_lo; k <= lr.k_hi; ++k) {
          const double cz = cfg.z_min + (k + 0.5) * cfg.resolution;
          if (std::abs(cz - box.center[2]) <= 0.5 * box.size[2]) {
            occ.at(i, j, k) = 1;
          }
        }
      }
    }
  }
  return occ;
}

InstanceMap rasterize_instances_bev(const std::vector<Box3D>& boxes, const VoxelConfig& cfg) {
  cfg.validate();
  InstanceMap inst(cfg.nx(), cfg.ny(), 0);
  for (const auto& box : boxes) {
    box.validate();
    const CellRange fr = footprint_range(box, cfg);
    if (fr.empty()) continue;
#pragma omp parallel for schedule(static)
    for (int i = fr.i_lo; i <= fr.i_hi; ++i) {
      for (int j = fr.j_lo; j <= fr.j_hi; ++j) {
        const auto cxy = index_to_center_2d({i, j}, cfg);
        if (!box.footprint_contains(cxy[0], cxy[1])) continue;
        auto& cell = inst.at(i, j);
        if (cell == 0 || box.instance_id < cell) cell = box.instance_id;
      }
    }
  }
  return inst;
}

Grid3D<std::uint32_t> rasterize_instances_3d(const std::vector<Box3D>& boxes,
                                             const VoxelConfig& cfg) {
  cfg.validate();
  Grid3D<std::uint32_t> inst(cfg.nx(), cfg.ny(), cfg.nz(), 0);
  for (const auto& box : boxes) {
    box.validate();
    const CellRange fr = footprint_range(box, cfg);
    const LayerRange lr = layer_range(box, cfg);
    if (fr.empty() || lr.empty()) continue;
#pragma omp parallel for schedule(static)
    for (int i = fr.i_lo; i <= fr.i_hi; ++i) {
      for (int j = fr.j_lo; j <= fr.j_hi; ++j) {
        const auto cxy = index_to_center_2d({i, j}, cfg);
        if (!box.footprint_contains(cxy[0], cxy[1])) continue;
        for (int k = lr.k_lo; k <= lr.k_hi; ++k) {
          const double cz = cfg.z_min + (k + 0.5) * cfg.resolution;
          if (std::abs(cz - box.center[2]) > 0.5 * box.size[2]) continue;
          auto& cell = inst.at(i, j, k);
          if (cell == 0 || box.instance_id < cell) cell = box.instance_id;
        }
      }
    }
  }
  return inst;
}

BevOccupancy compress_to_bev(const Occupancy3D& occ) {
  BevOccupancy bev(occ.nx(), occ.ny(), 0);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < occ.nx(); ++i) {
    for (int j = 0; j < occ.ny(); ++j) {
      std::uint8_t any = 0;
      for (int k = 0; k < occ.nz(); ++k) any |= occ.at(i, j, k);
      bev.at(i, j) = any ? 1 : 0;
    }
  }
  return bev;
}

HeightMap extract_heights(const Occupancy3D& occ, const VoxelConfig& cfg) {
  require(occ.nx() == cfg.nx() && occ.ny() == cfg.ny() && occ.nz() == cfg.nz(),
          "extract_heights: grid dims differ from config");
  HeightMap heights(occ.nx(), occ.ny());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < occ.nx(); ++i) {
    for (int j = 0; j < occ.ny(); ++j) {
      for (int k = occ.nz() - 1; k >= 0; --k) {
        if (occ.at(i, j, k)) {
          heights.set(i, j, static_cast<float>(cfg.z_min + (k + 1) * cfg.resolution));
          break;
        }
      }
    }
  }
  return heights;
}

Occupancy3D build_fine_grained(const BevOccupancy& bev, const HeightMap& heights,
                               const VoxelConfig& cfg, int base_k) {
  require(bev.rows() == cfg.nx() && bev.cols() == cfg.ny(),
          "build_fine_grained: bev dims differ from config");
  validate_paired(heights, bev);
  require(base_k >= 0 && base_k < cfg.nz(), "build_fine_grained: base_k outside lattice");
  Occupancy3D occ(cfg.nx(), cfg.ny(), cfg.nz(), 0);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < bev.rows(); ++i) {
    for (int j = 0; j < bev.cols(); ++j) {
      if (!bev.at(i, j)) continue;
      const double h = *heights.get(i, j);
      const long long top =
          std::llround((h - cfg.z_min) / cfg.resolution) - 1;
      const int k_top = static_cast<int>(
          std::clamp(top, static_cast<long long>(0), static_cast<long long>(cfg.nz() - 1)));
      for (int k = base_k; k <= std::max(k_top, base_k); ++k) occ.at(i, j, k) = 1;
    }
  }
  return occ;
}

FlowField gt_backward_flow(const InstanceMap& inst_t, const InstanceMap& inst_prev) {
  require(inst_t.rows() == inst_prev.rows() && inst_t.cols() == inst_prev.cols(),
          "gt_backward_flow: instance map dims differ");
  struct Accum {
    long long sum_r = 0, sum_c = 0, n = 0;
  };
  std::map<std::uint32_t, Accum> centroids;
  for (int i = 0; i < inst_prev.rows(); ++i) {
    for (int j = 0; j < inst_prev.cols(); ++j) {
      const auto id = inst_prev.at(i, j);
      if (id == 0) continue;
      auto& a = centroids[id];
      a.sum_r += i;
      a.sum_c += j;
      a.n += 1;
    }
  }
  FlowField flow(inst_t.rows(), inst_t.cols());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < inst_t.rows(); ++i) {
    for (int j = 0; j < inst_t.cols(); ++j) {
      const auto id = inst_t.at(i, j);
      if (id == 0) continue;
      const auto it = centroids.find(id);
      if (it == centroids.end()) continue;
      const auto& a = it->second;
      const double cr = static_cast<double>(a.sum_r) / a.n;
      const double cc = static_cast<double>(a.sum_c) / a.n;
      flow.d_row.at(i, j) = static_cast<float>(cr - i);
      flow.d_col.at(i, j) = static_cast<float>(cc - j);
    }
  }
  return flow;
}

LabeledSequence generate_labels(const std::vector<std::vector<Box3D>>& boxes_per_frame,
                                const VoxelConfig& cfg, int n_past, int n_future) {
  // The t=0 backward flow is taken against frame t=-1, so at least one
  // past frame must exist.
  require(n_past >= 1 && n_future >= 0, "generate_labels: needs n_past >= 1");
  const int n_frames = n_past + n_future + 1;
  require(static_cast<int>(boxes_per_frame.size()) == n_frames,
          "generate_labels: frame count must equal n_past + n_future + 1");
  cfg.validate();

  LabeledSequence seq;
  seq.n_past = n_past;
  seq.n_future = n_future;
  seq.boxes = boxes_per_frame;
  seq.frames.reserve(n_frames);
  for (const auto& boxes : boxes_per_frame) {
    LabeledFrame f;
    f.occ_bb = rasterize_boxes_3d(boxes, cfg);
    f.occ_bev = compress_to_bev(f.occ_bb);
    f.heights = extract_heights(f.occ_bb, cfg);
    f.occ_fg = build_fine_grained(f.occ_bev, f.heights, cfg);
    f.instances = rasterize_instances_bev(boxes, cfg);
    seq.frames.push_back(std::move(f));
  }
  seq.flows.reserve(n_future + 1);
  for (int t = 0; t <= n_future; ++t) {
    seq.flows.push_back(
        gt_backward_flow(seq.frame_at(t).instances, seq.frame_at(t - 1).instances));
  }
  return seq;
}

}  // namespace occgrid
