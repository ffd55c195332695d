#include "occgrid/serial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "occgrid/losses.hpp"

namespace occgrid::serial {

namespace {

constexpr std::size_t kBlock = 4096;  // must match the parallel reduction blocking

bool box_contains_center(const Box3D& box, const VoxelConfig& cfg, int i, int j, int k) {
  const auto c = index_to_center({i, j, k}, cfg);
  return box.contains(c[0], c[1], c[2]);
}

}  // namespace

Occupancy3D rasterize_boxes_3d(const std::vector<Box3D>& boxes, const VoxelConfig& cfg) {
  cfg.validate();
  Occupancy3D occ(cfg.nx(), cfg.ny(), cfg.nz(), 0);
  for (int i = 0; i < cfg.nx(); ++i) {
    for (int j = 0; j < cfg.ny(); ++j) {
      for (int k = 0; k < cfg.nz(); ++k) {
        for (const auto& box : boxes) {
          if (box_contains_center(box, cfg, i, j, k)) {
            occ.at(i, j, k) = 1;
            break;
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
  for (int i = 0; i < cfg.nx(); ++i) {
    for (int j = 0; j < cfg.ny(); ++j) {
      const auto c = index_to_center_2d({i, j}, cfg);
      std::uint32_t best = 0;
      for (const auto& box : boxes) {
        if (box.footprint_contains(c[0], c[1])) {
          if (best == 0 || box.instance_id < best) best = box.instance_id;
        }
      }
      inst.at(i, j) = best;
    }
  }
  return inst;
}

BevOccupancy compress_to_bev(const Occupancy3D& occ) {
  BevOccupancy bev(occ.nx(), occ.ny(), 0);
  for (int i = 0; i < occ.nx(); ++i) {
    for (int j = 0; j < occ.ny(); ++j) {
      for (int k = 0; k < occ.nz(); ++k) {
        if (occ.at(i, j, k)) {
          bev.at(i, j) = 1;
          break;
        }
      }
    }
  }
  return bev;
}

HeightMap extract_heights(const Occupancy3D& occ, const VoxelConfig& cfg) {
  HeightMap heights(occ.nx(), occ.ny());
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
  validate_paired(heights, bev);
  Occupancy3D occ(cfg.nx(), cfg.ny(), cfg.nz(), 0);
  for (int i = 0; i < bev.rows(); ++i) {
    for (int j = 0; j < bev.cols(); ++j) {
      if (!bev.at(i, j)) continue;
      const double h = *heights.get(i, j);
      const long long top = std::llround((h - cfg.z_min) / cfg.resolution) - 1;
      const int k_top = static_cast<int>(
          std::clamp(top, static_cast<long long>(0), static_cast<long long>(cfg.nz() - 1)));
      for (int k = base_k; k <= std::max(k_top, base_k); ++k) occ.at(i, j, k) = 1;
    }
  }
  return occ;
}

FlowField gt_backward_flow(const InstanceMap& inst_t, const InstanceMap& inst_prev) {
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
  for (int i = 0; i < inst_t.rows(); ++i) {
    for (int j = 0; j < inst_t.cols(); ++j) {
      const auto id = inst_t.at(i, j);
      if (id == 0) continue;
      const auto it = centroids.find(id);
      if (it == centroids.end()) continue;
      const double cr = static_cast<double>(it->second.sum_r) / it->second.n;
      const double cc = static_cast<double>(it->second.sum_c) / it->second.n;
      flow.d_row.at(i, j) = static_cast<float>(cr - i);
      flow.d_col.at(i, j) = static_cast<float>(cc - j);
    }
  }
  return flow;
}

BevFeature avg_pool_z(const FeatureVolume& vol) {
  BevFeature out(vol.channels, vol.rows, vol.cols);
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
  BevFeature out(vol.channels, vol.rows, vol.cols);
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
  if (w.alpha_max == 0.0) return serial::avg_pool_z(vol);
  if (w.alpha_avg == 0.0) return serial::max_pool_z(vol);
  const double sum = w.alpha_avg + w.alpha_max;
  const double a = w.alpha_avg / sum;
  const double b = w.alpha_max / sum;
  const BevFeature avg = serial::avg_pool_z(vol);
  const BevFeature mx = serial::max_pool_z(vol);
  BevFeature out(vol.channels, vol.rows, vol.cols);
  for (std::size_t n = 0; n < out.data.size(); ++n) {
    out.data[n] = static_cast<float>(a * avg.data[n] + b * mx.data[n]);
  }
  return out;
}

BevOccupancy warp_to_present(const BevOccupancy& grid, const Pose2D& pose,
                             const VoxelConfig& cfg) {
  BevOccupancy out(grid.rows(), grid.cols(), 0);
  for (int i = 0; i < grid.rows(); ++i) {
    for (int j = 0; j < grid.cols(); ++j) {
      const auto center = index_to_center_2d({i, j}, cfg);
      const auto src = pose.apply_inverse(center[0], center[1]);
      const auto idx = world_to_index_2d(src[0], src[1], cfg);
      out.at(i, j) = idx ? grid.at(idx->i, idx->j) : 0;
    }
  }
  return out;
}

std::vector<InstanceCenter> extract_centers_nms(const RealGrid2D& seg_prob,
                                                const NmsParams& params) {
  const int reach = params.radius - 1;
  std::vector<InstanceCenter> centers;
  for (int i = 0; i < seg_prob.rows(); ++i) {
    for (int j = 0; j < seg_prob.cols(); ++j) {
      const float v = seg_prob.at(i, j);
      if (static_cast<double>(v) < params.threshold) continue;
      bool is_peak = true;
      for (int di = -reach; di <= reach && is_peak; ++di) {
        for (int dj = -reach; dj <= reach; ++dj) {
          if (di == 0 && dj == 0) continue;
          const int ni = i + di;
          const int nj = j + dj;
          if (!seg_prob.in_bounds(ni, nj)) continue;
          const float nv = seg_prob.at(ni, nj);
          if (nv > v || (nv == v && (ni < i || (ni == i && nj < j)))) {
            is_peak = false;
            break;
          }
        }
      }
      if (is_peak) centers.push_back({i, j, static_cast<double>(v), 0});
    }
  }
  std::stable_sort(centers.begin(), centers.end(),
                   [](const InstanceCenter& a, const InstanceCenter& b) {
                     if (a.score != b.score) return a.score > b.score;
                     if (a.row != b.row) return a.row < b.row;
                     return a.col < b.col;
                   });
  for (std::size_t n = 0; n < centers.size(); ++n) {
    centers[n].instance_id = static_cast<std::uint32_t>(n + 1);
  }
  return centers;
}

InstanceMap associate_step(const std::vector<InstanceCenter>& centers_prev,
                           const InstanceMap& prev_ids, const FlowField& flow_t,
                           const BevOccupancy& occ_t) {
  InstanceMap out(occ_t.rows(), occ_t.cols(), 0);
  if (centers_prev.empty()) return out;
  for (int i = 0; i < occ_t.rows(); ++i) {
    for (int j = 0; j < occ_t.cols(); ++j) {
      if (!occ_t.at(i, j)) continue;
      const int qi = static_cast<int>(std::llround(i + static_cast<double>(flow_t.d_row.at(i, j))));
      const int qj = static_cast<int>(std::llround(j + static_cast<double>(flow_t.d_col.at(i, j))));
      if (!prev_ids.in_bounds(qi, qj)) continue;
      if (prev_ids.at(qi, qj) == 0) continue;
      long long best_d2 = std::numeric_limits<long long>::max();
      std::uint32_t best_id = 0;
      for (const auto& ctr : centers_prev) {
        const long long dr = ctr.row - qi;
        const long long dc = ctr.col - qj;
        const long long d2 = dr * dr + dc * dc;
        if (d2 < best_d2 || (d2 == best_d2 && ctr.instance_id < best_id)) {
          best_d2 = d2;
          best_id = ctr.instance_id;
        }
      }
      out.at(i, j) = best_id;
    }
  }
  return out;
}

ConfusionCounts confusion(const Occupancy3D& gt, const Occupancy3D& pred,
                          const std::vector<Box3D>& boxes, const VoxelConfig& cfg) {
  ConfusionCounts out;
  for (int i = 0; i < gt.nx(); ++i) {
    for (int j = 0; j < gt.ny(); ++j) {
      for (int k = 0; k < gt.nz(); ++k) {
        const bool g = gt.at(i, j, k) != 0;
        const bool p = pred.at(i, j, k) != 0;
        if (g && p) {
          ++out.tp;
        } else if (!g && p) {
          ++out.fp;
          for (const auto& box : boxes) {
            if (box_contains_center(box, cfg, i, j, k)) {
              ++out.fp_in_box;
              break;
            }
          }
        } else if (g && !p) {
          ++out.fn;
        } else {
          ++out.tn;
        }
      }
    }
  }
  return out;
}

double bce_loss(const RealGrid2D& pred_prob, const BevOccupancy& gt) {
  constexpr double kEps = 1e-7;
  const auto& p = pred_prob.data();
  const auto& y = gt.data();
  double sum = 0.0;
  for (std::size_t lo = 0; lo < p.size(); lo += kBlock) {
    const std::size_t hi = std::min(lo + kBlock, p.size());
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const double pi = std::clamp(static_cast<double>(p[i]), kEps, 1.0 - kEps);
      s += y[i] ? -std::log(pi) : -std::log(1.0 - pi);
    }
    sum += s;
  }
  return sum / static_cast<double>(p.size());
}

double smooth_l1_loss(const RealGrid2D& pred, const RealGrid2D& gt,
                      const BevOccupancy& valid_mask, double beta) {
  std::int64_t selected = 0;
  for (const auto m : valid_mask.data()) selected += m ? 1 : 0;
  if (selected == 0) return 0.0;
  const auto& pv = pred.data();
  const auto& gv = gt.data();
  const auto& mv = valid_mask.data();
  double sum = 0.0;
  for (std::size_t lo = 0; lo < pv.size(); lo += kBlock) {
    const std::size_t hi = std::min(lo + kBlock, pv.size());
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      if (!mv[i]) continue;
      const double d = static_cast<double>(pv[i]) - static_cast<double>(gv[i]);
      const double ad = std::abs(d);
      s += ad < beta ? 0.5 * d * d / beta : ad - 0.5 * beta;
    }
    sum += s;
  }
  return sum / static_cast<double>(selected);
}

}  // namespace occgrid::serial
