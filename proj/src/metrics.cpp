#include "occgrid/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

namespace occgrid {

namespace {

struct OverlapCounts {
  std::int64_t inter = 0;
  std::int64_t uni = 0;
};

template <typename GridT>
OverlapCounts overlap(const GridT& gt, const GridT& pred) {
  require(gt.size() == pred.size(), "iou: grid dims differ");
  std::int64_t inter = 0, uni = 0;
#pragma omp parallel for schedule(static) reduction(+ : inter, uni)
  for (long long n = 0; n < static_cast<long long>(gt.size()); ++n) {
    const bool g = gt.data()[n] != 0;
    const bool p = pred.data()[n] != 0;
    inter += (g && p) ? 1 : 0;
    uni += (g || p) ? 1 : 0;
  }
  return {inter, uni};
}

template <typename GridT>
double iou_window_impl(const std::vector<GridT>& gt_seq, const std::vector<GridT>& pred_seq,
                       const EvalWindow& window) {
  window.validate();
  require(gt_seq.size() == pred_seq.size(), "iou_window: sequence lengths differ");
  require(window.t_start >= 0 && window.t_end < static_cast<int>(gt_seq.size()),
          "iou_window: window outside sequence");
  double sum = 0.0;
  for (int t = window.t_start; t <= window.t_end; ++t) {
    const auto c = overlap(gt_seq[t], pred_seq[t]);
    sum += c.uni == 0 ? 1.0 : static_cast<double>(c.inter) / static_cast<double>(c.uni);
  }
  return sum / window.n_all();
}

}  // namespace

ConfusionCounts confusion(const Occupancy3D& gt, const Occupancy3D& pred,
                          const std::vector<Box3D>& boxes, const VoxelConfig& cfg) {
  require(gt.nx() == pred.nx() && gt.ny() == pred.ny() && gt.nz() == pred.nz(),
          "confusion: grid dims differ");
  require(gt.nx() == cfg.nx() && gt.ny() == cfg.ny() && gt.nz() == cfg.nz(),
          "confusion: grid dims differ from config");
  std::int64_t tp = 0, fp = 0, fn = 0, fpb = 0;
  const int ny = gt.ny(), nz = gt.nz();
#pragma omp parallel for schedule(static) reduction(+ : tp, fp, fn, fpb)
  for (int i = 0; i < gt.nx(); ++i) {
    for (int j = 0; j < ny; ++j) {
      for (int k = 0; k < nz; ++k) {
        const bool g = gt.at(i, j, k) != 0;
        const bool p = pred.at(i, j, k) != 0;
        if (g && p) {
          ++tp;
        } else if (!g && p) {
          ++fp;
          const auto c = index_to_center({i, j, k}, cfg);
          for (const auto& box : boxes) {
            if (box.contains(c[0], c[1], c[2])) {
              ++fpb;
              break;
            }
          }
        } else if (g && !p) {
          ++fn;
        }
      }
    }
  }
  ConfusionCounts out;
  out.tp = tp;
  out.fp = fp;
  out.fn = fn;
  out.fp_in_box = fpb;
  out.tn = static_cast<std::int64_t>(gt.size()) - tp - fp - fn;
  return out;
}

CiouResult ciou_frame(const ConfusionCounts& c, CiouMode mode) {
  const std::int64_t num = c.tp + c.fp_in_box;
  const std::int64_t den =
      mode == CiouMode::kLiteral ? c.tp + c.fn + (c.fp - c.fp_in_box) : c.tp + c.fn + c.fp;
  if (den == 0) {
    if (num == 0) return {1.0, 0};  // both grids empty
    return {0.0, 1};                // literal form undefined; frame skipped
  }
  return {static_cast<double>(num) / static_cast<double>(den), 0};
}

double iou_window(const std::vector<Occupancy3D>& gt_seq,
                  const std::vector<Occupancy3D>& pred_seq, const EvalWindow& window) {
  return iou_window_impl(gt_seq, pred_seq, window);
}

double iou_window(const std::vector<BevOccupancy>& gt_seq,
                  const std::vector<BevOccupancy>& pred_seq, const EvalWindow& window) {
  return iou_window_impl(gt_seq, pred_seq, window);
}

CiouResult c_iou_window(const std::vector<Occupancy3D>& gt_fg_seq,
                        const std::vector<Occupancy3D>& pred_seq,
                        const std::vector<std::vector<Box3D>>& boxes_per_frame,
                        const EvalWindow& window, const VoxelConfig& cfg, CiouMode mode) {
  window.validate();
  require(gt_fg_seq.size() == pred_seq.size(), "c_iou_window: sequence lengths differ");
  require(boxes_per_frame.size() == gt_fg_seq.size(),
          "c_iou_window: boxes not aligned with frames");
  require(window.t_start >= 0 && window.t_end < static_cast<int>(gt_fg_seq.size()),
          "c_iou_window: window outside sequence");
  double sum = 0.0;
  int evaluated = 0;
  int skipped = 0;
  for (int t = window.t_start; t <= window.t_end; ++t) {
    const auto counts = confusion(gt_fg_seq[t], pred_seq[t], boxes_per_frame[t], cfg);
    const auto frame = ciou_frame(counts, mode);
    if (frame.skipped_frames) {
      ++skipped;
      continue;
    }
    sum += frame.value;
    ++evaluated;
  }
  return {evaluated > 0 ? sum / evaluated : 0.0, skipped};
}

namespace {

struct FrameInstances {
  std::map<std::uint32_t, std::int64_t> gt_sizes;
  std::map<std::uint32_t, std::int64_t> pred_sizes;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::int64_t> pair_counts;
};

FrameInstances collect_instances(const Grid3D<std::uint32_t>& gt,
                                 const Grid3D<std::uint32_t>& pred) {
  require(gt.size() == pred.size(), "vpq: volume dims differ");
  FrameInstances f;
  for (std::size_t n = 0; n < gt.size(); ++n) {
    const auto g = gt.data()[n];
    const auto p = pred.data()[n];
    if (g) ++f.gt_sizes[g];
    if (p) ++f.pred_sizes[p];
    if (g && p) ++f.pair_counts[{g, p}];
  }
  return f;
}

struct Candidate {
  double iou;
  std::uint32_t gt_id;
  std::uint32_t pred_id;
};

}  // namespace

double vpq(const std::vector<Grid3D<std::uint32_t>>& gt_inst_seq,
           const std::vector<Grid3D<std::uint32_t>>& pred_inst_seq, const EvalWindow& window,
           double match_threshold, bool normalize) {
  window.validate();
  require(match_threshold > 0.0 && match_threshold < 1.0,
          "vpq: match_threshold must be in (0,1)");
  require(gt_inst_seq.size() == pred_inst_seq.size(), "vpq: sequence lengths differ");
  require(window.t_start >= 0 && window.t_end < static_cast<int>(gt_inst_seq.size()),
          "vpq: window outside sequence");

  // Identity bindings recorded from matches in earlier window frames.
  std::map<std::uint32_t, std::uint32_t> bound_gt;    // gt id -> pred id
  std::map<std::uint32_t, std::uint32_t> bound_pred;  // pred id -> gt id

  double total = 0.0;
  for (int t = window.t_start; t <= window.t_end; ++t) {
    const auto frame = collect_instances(gt_inst_seq[t], pred_inst_seq[t]);

    std::vector<Candidate> candidates;
    candidates.reserve(frame.pair_counts.size());
    for (const auto& [pair, inter] : frame.pair_counts) {
      const std::int64_t uni =
          frame.gt_sizes.at(pair.first) + frame.pred_sizes.at(pair.second) - inter;
      const double iou = static_cast<double>(inter) / static_cast<double>(uni);
      if (iou > match_threshold) candidates.push_back({iou, pair.first, pair.second});
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) {
                       if (a.iou != b.iou) return a.iou > b.iou;
                       if (a.gt_id != b.gt_id) return a.gt_id < b.gt_id;
                       return a.pred_id < b.pred_id;
                     });

    std::map<std::uint32_t, bool> gt_used, pred_used;
    double sum_iou = 0.0;
    std::int64_t tp = 0;
    for (const auto& cand : candidates) {
      if (gt_used[cand.gt_id] || pred_used[cand.pred_id]) continue;
      const auto bg = bound_gt.find(cand.gt_id);
      if (bg != bound_gt.end() && bg->second != cand.pred_id) continue;
      const auto bp = bound_pred.find(cand.pred_id);
      if (bp != bound_pred.end() && bp->second != cand.gt_id) continue;
      gt_used[cand.gt_id] = true;
      pred_used[cand.pred_id] = true;
      bound_gt[cand.gt_id] = cand.pred_id;
      bound_pred[cand.pred_id] = cand.gt_id;
      sum_iou += cand.iou;
      ++tp;
    }
    std::int64_t fn = 0, fp = 0;
    for (const auto& entry : frame.gt_sizes) {
      if (!gt_used[entry.first]) ++fn;
    }
    for (const auto& entry : frame.pred_sizes) {
      if (!pred_used[entry.first]) ++fp;
    }
    const double denom = static_cast<double>(tp) + 0.5 * fp + 0.5 * fn;
    total += denom == 0.0 ? 1.0 : sum_iou / denom;  // empty-vs-empty frame is vacuously perfect
  }
  return normalize ? total / window.n_all() : total;
}

Grid3D<std::uint32_t> lift_instances(const InstanceMap& instances, const HeightMap& heights,
                                     const VoxelConfig& cfg) {
  require(instances.rows() == cfg.nx() && instances.cols() == cfg.ny(),
          "lift_instances: dims differ from config");
  Grid3D<std::uint32_t> out(cfg.nx(), cfg.ny(), cfg.nz(), 0);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < instances.rows(); ++i) {
    for (int j = 0; j < instances.cols(); ++j) {
      const auto id = instances.at(i, j);
      if (id == 0) continue;
      const auto h = heights.get(i, j);
      if (!h) continue;
      const double clamped = std::clamp(static_cast<double>(*h), cfg.z_min, cfg.z_max);
      const long long top = std::llround((clamped - cfg.z_min) / cfg.resolution) - 1;
      const int k_top = static_cast<int>(
          std::clamp(top, static_cast<long long>(0), static_cast<long long>(cfg.nz() - 1)));
      for (int k = 0; k <= k_top; ++k) out.at(i, j, k) = id;
    }
  }
  return out;
}

Grid3D<std::uint32_t> lift_instances(const InstanceMap& instances, const RealGrid2D& heights,
                                     const VoxelConfig& cfg) {
  require(instances.rows() == heights.rows() && instances.cols() == heights.cols(),
          "lift_instances: dims differ");
  HeightMap hm(instances.rows(), instances.cols());
  for (int i = 0; i < instances.rows(); ++i) {
    for (int j = 0; j < instances.cols(); ++j) {
      if (instances.at(i, j) == 0) continue;
      hm.set(i, j, static_cast<float>(
                       std::clamp(static_cast<double>(heights.at(i, j)), cfg.z_min, cfg.z_max)));
    }
  }
  return lift_instances(instances, hm, cfg);
}

MetricsReport evaluate_sequence(const LabeledSequence& gt,
                                const std::vector<Occupancy3D>& pred_3d_seq,
                                const std::vector<Grid3D<std::uint32_t>>& pred_inst_seq,
                                const VoxelConfig& cfg, const EvalParams& params) {
  const int horizon = gt.n_future;
  require(static_cast<int>(pred_3d_seq.size()) == horizon + 1,
          "evaluate_sequence: prediction count must cover [0, n_future]");
  require(pred_inst_seq.size() == pred_3d_seq.size(),
          "evaluate_sequence: instance predictions not aligned");

  std::vector<Occupancy3D> gt_bb, gt_fg;
  std::vector<std::vector<Box3D>> boxes;
  std::vector<Grid3D<std::uint32_t>> gt_inst_bb, gt_inst_fg;
  for (int t = 0; t <= horizon; ++t) {
    const auto& f = gt.frame_at(t);
    gt_bb.push_back(f.occ_bb);
    gt_fg.push_back(f.occ_fg);
    boxes.push_back(gt.boxes_at(t));
    gt_inst_bb.push_back(rasterize_instances_3d(gt.boxes_at(t), cfg));
    gt_inst_fg.push_back(lift_instances(f.instances, f.heights, cfg));
  }

  require(horizon >= 1, "evaluate_sequence: needs at least one future frame");
  const EvalWindow wc = EvalWindow::current();
  const EvalWindow wf = EvalWindow::future(horizon);
  const EvalWindow wa = EvalWindow::all(horizon);

  MetricsReport report;
  report.iou_bb = {iou_window(gt_bb, pred_3d_seq, wc), iou_window(gt_bb, pred_3d_seq, wf),
                   iou_window(gt_bb, pred_3d_seq, wa)};
  report.iou_fg = {iou_window(gt_fg, pred_3d_seq, wc), iou_window(gt_fg, pred_3d_seq, wf),
                   iou_window(gt_fg, pred_3d_seq, wa)};
  const auto cc = c_iou_window(gt_fg, pred_3d_seq, boxes, wc, cfg, params.ciou_mode);
  const auto cf = c_iou_window(gt_fg, pred_3d_seq, boxes, wf, cfg, params.ciou_mode);
  const auto ca = c_iou_window(gt_fg, pred_3d_seq, boxes, wa, cfg, params.ciou_mode);
  report.ciou = {cc.value, cf.value, ca.value, cc.skipped_frames, cf.skipped_frames,
                 ca.skipped_frames};
  report.vpq_bb =
      vpq(gt_inst_bb, pred_inst_seq, wa, params.vpq_match_threshold, params.vpq_normalize);
  report.vpq_fg =
      vpq(gt_inst_fg, pred_inst_seq, wa, params.vpq_match_threshold, params.vpq_normalize);
  return report;
}

}  // namespace occgrid
