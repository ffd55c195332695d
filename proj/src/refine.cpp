#include "occgrid/refine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "occgrid/labelgen.hpp"

namespace occgrid {

void ForecastBundle::validate() const {
  require(!initial_occ.empty(), "ForecastBundle: no frames");
  require(initial_occ.size() == flows.size() && initial_occ.size() == heights.size(),
          "ForecastBundle: field counts differ");
  const int rows = initial_occ[0].rows();
  const int cols = initial_occ[0].cols();
  for (std::size_t t = 0; t < initial_occ.size(); ++t) {
    require(initial_occ[t].rows() == rows && initial_occ[t].cols() == cols &&
                flows[t].rows() == rows && flows[t].cols() == cols &&
                heights[t].rows() == rows && heights[t].cols() == cols,
            "ForecastBundle: frame dims differ");
    for (const auto p : initial_occ[t].data()) {
      require(p >= 0.0f && p <= 1.0f, "ForecastBundle: probability outside [0,1]");
    }
    validate_flow(flows[t]);
    for (const auto h : heights[t].data()) {
      require(std::isfinite(h), "ForecastBundle: non-finite height");
    }
  }
}

std::vector<InstanceCenter> extract_centers_nms(const RealGrid2D& seg_prob,
                                                const NmsParams& params) {
  require(params.radius >= 1, "extract_centers_nms: radius must be >= 1");
  require(params.threshold > 0.0 && params.threshold < 1.0,
          "extract_centers_nms: threshold must be in (0,1)");
  const int rows = seg_prob.rows();
  const int cols = seg_prob.cols();
  const int reach = params.radius - 1;  // neighbors strictly closer than radius

  std::vector<std::uint8_t> keep(seg_prob.size(), 0);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
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
      if (is_peak) keep[static_cast<std::size_t>(i) * cols + j] = 1;
    }
  }

  std::vector<InstanceCenter> centers;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      if (keep[static_cast<std::size_t>(i) * cols + j]) {
        centers.push_back({i, j, static_cast<double>(seg_prob.at(i, j)), 0});
      }
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

namespace {

int round_half_away(double x) {
  return static_cast<int>(std::llround(x));
}

std::uint32_t nearest_center_id(const std::vector<InstanceCenter>& centers, int r, int c) {
  long long best_d2 = std::numeric_limits<long long>::max();
  std::uint32_t best_id = 0;
  for (const auto& ctr : centers) {
    const long long dr = ctr.row - r;
    const long long dc = ctr.col - c;
    const long long d2 = dr * dr + dc * dc;
    if (d2 < best_d2 || (d2 == best_d2 && ctr.instance_id < best_id)) {
      best_d2 = d2;
      best_id = ctr.instance_id;
    }
  }
  return best_id;
}

// Per-ID centroids of an instance map, rounded half away from zero. The
// carried score keeps the original ordering intact for downstream ties.
std::vector<InstanceCenter> centroid_centers(const InstanceMap& ids,
                                             const std::vector<InstanceCenter>& previous) {
  struct Accum {
    long long sum_r = 0, sum_c = 0, n = 0;
  };
  std::map<std::uint32_t, Accum> acc;
  for (int i = 0; i < ids.rows(); ++i) {
    for (int j = 0; j < ids.cols(); ++j) {
      const auto id = ids.at(i, j);
      if (id == 0) continue;
      auto& a = acc[id];
      a.sum_r += i;
      a.sum_c += j;
      a.n += 1;
    }
  }
  std::map<std::uint32_t, double> scores;
  for (const auto& c : previous) scores[c.instance_id] = c.score;
  std::vector<InstanceCenter> centers;
  centers.reserve(acc.size());
  for (const auto& [id, a] : acc) {
    InstanceCenter c;
    c.row = round_half_away(static_cast<double>(a.sum_r) / a.n);
    c.col = round_half_away(static_cast<double>(a.sum_c) / a.n);
    const auto it = scores.find(id);
    c.score = it != scores.end() ? it->second : static_cast<double>(a.n);
    c.instance_id = id;
    centers.push_back(c);
  }
  return centers;
}

}  // namespace

InstanceMap associate_step(const std::vector<InstanceCenter>& centers_prev,
                           const InstanceMap& prev_ids, const FlowField& flow_t,
                           const BevOccupancy& occ_t) {
  const int rows = occ_t.rows();
  const int cols = occ_t.cols();
  require(prev_ids.rows() == rows && prev_ids.cols() == cols && flow_t.rows() == rows &&
              flow_t.cols() == cols,
          "associate_step: grid dims differ");
  InstanceMap out(rows, cols, 0);
  if (centers_prev.empty()) return out;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      if (!occ_t.at(i, j)) continue;
      const int qi = round_half_away(i + static_cast<double>(flow_t.d_row.at(i, j)));
      const int qj = round_half_away(j + static_cast<double>(flow_t.d_col.at(i, j)));
      if (!prev_ids.in_bounds(qi, qj)) continue;
      if (prev_ids.at(qi, qj) == 0) continue;
      out.at(i, j) = nearest_center_id(centers_prev, qi, qj);
    }
  }
  return out;
}

BevOccupancy clip_mask(const InstanceMap& m) {
  BevOccupancy out(m.rows(), m.cols(), 0);
#pragma omp parallel for schedule(static)
  for (long long n = 0; n < static_cast<long long>(m.size()); ++n) {
    out.data()[n] = m.data()[n] ? 1 : 0;
  }
  return out;
}

BevOccupancy refine_occupancy(const RealGrid2D& initial, const BevOccupancy& mask,
                              double binarize_threshold) {
  require(initial.rows() == mask.rows() && initial.cols() == mask.cols(),
          "refine_occupancy: grid dims differ");
  BevOccupancy out(initial.rows(), initial.cols(), 0);
#pragma omp parallel for schedule(static)
  for (long long n = 0; n < static_cast<long long>(initial.size()); ++n) {
    out.data()[n] =
        (static_cast<double>(initial.data()[n]) >= binarize_threshold && mask.data()[n]) ? 1 : 0;
  }
  return out;
}

Occupancy3D lift_to_3d(const BevOccupancy& bev, const RealGrid2D& heights,
                       const VoxelConfig& cfg) {
  require(bev.rows() == heights.rows() && bev.cols() == heights.cols(),
          "lift_to_3d: grid dims differ");
  HeightMap clamped(bev.rows(), bev.cols());
  for (int i = 0; i < bev.rows(); ++i) {
    for (int j = 0; j < bev.cols(); ++j) {
      if (!bev.at(i, j)) continue;
      const double h = std::clamp(static_cast<double>(heights.at(i, j)), cfg.z_min, cfg.z_max);
      clamped.set(i, j, static_cast<float>(h));
    }
  }
  return build_fine_grained(bev, clamped, cfg);
}

RefinedSequence refine_sequence(const ForecastBundle& bundle, const RealGrid2D& seg_prob_prev,
                                const NmsParams& nms, double binarize_threshold,
                                const VoxelConfig& cfg) {
  bundle.validate();
  require(seg_prob_prev.rows() == bundle.initial_occ[0].rows() &&
              seg_prob_prev.cols() == bundle.initial_occ[0].cols(),
          "refine_sequence: seg_prob_prev dims differ from bundle");

  std::vector<InstanceCenter> centers = extract_centers_nms(seg_prob_prev, nms);
  InstanceMap prev_map = segment_by_centers(seg_prob_prev, centers, binarize_threshold);

  RefinedSequence out;
  const int n_frames = bundle.frame_count();
  out.bev.reserve(n_frames);
  out.instances.reserve(n_frames);
  out.volumes.reserve(n_frames);
  for (int t = 0; t < n_frames; ++t) {
    BevOccupancy occ_t(bundle.initial_occ[t].rows(), bundle.initial_occ[t].cols(), 0);
#pragma omp parallel for schedule(static)
    for (long long n = 0; n < static_cast<long long>(occ_t.size()); ++n) {
      occ_t.data()[n] =
          static_cast<double>(bundle.initial_occ[t].data()[n]) >= binarize_threshold ? 1 : 0;
    }
    InstanceMap map_t = associate_step(centers, prev_map, bundle.flows[t], occ_t);
    const BevOccupancy mask = clip_mask(map_t);
    BevOccupancy refined = refine_occupancy(bundle.initial_occ[t], mask, binarize_threshold);
    out.volumes.push_back(lift_to_3d(refined, bundle.heights[t], cfg));
    out.bev.push_back(std::move(refined));
    centers = centroid_centers(map_t, centers);
    prev_map = map_t;
    out.instances.push_back(std::move(map_t));
  }
  return out;
}

InstanceMap segment_by_centers(const RealGrid2D& seg_prob,
                               const std::vector<InstanceCenter>& centers,
                               double binarize_threshold) {
  InstanceMap out(seg_prob.rows(), seg_prob.cols(), 0);
  if (centers.empty()) return out;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < seg_prob.rows(); ++i) {
    for (int j = 0; j < seg_prob.cols(); ++j) {
      if (static_cast<double>(seg_prob.at(i, j)) < binarize_threshold) continue;
      out.at(i, j) = nearest_center_id(centers, i, j);
    }
  }
  return out;
}

}  // namespace occgrid
