#include <algorithm>
#include <chrono>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "occgrid/dataset.hpp"
#include "occgrid/errors.hpp"
#include "occgrid/grid_io.hpp"
#include "occgrid/labelgen.hpp"
#include "occgrid/metrics.hpp"
#include "occgrid/refine.hpp"
#include "occgrid/sim.hpp"
#include "occgrid/threads.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kToolVersion[] = "occgrid 1.0.0";

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

occgrid::SceneSpec scene_spec_from_json(const json& j) {
  occgrid::SceneSpec spec;
  try {
    spec.cfg = occgrid::voxel_config_from_json(j.at("voxel_config"));
    spec.n_past = j.at("n_past").get<int>();
    spec.n_future = j.at("n_future").get<int>();
    spec.frame_dt = j.at("frame_dt").get<double>();
    if (j.contains("ego_velocity")) {
      const auto v = j.at("ego_velocity").get<std::array<double, 2>>();
      spec.ego_vx = v[0];
      spec.ego_vy = v[1];
    }
    if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& a : j.value("actors", json::array())) {
      occgrid::ActorSpec actor;
      actor.box = occgrid::box_from_json(a.at("box"));
      const auto v = a.at("velocity").get<std::array<double, 2>>();
      actor.vx = v[0];
      actor.vy = v[1];
      actor.yaw_rate = a.value("yaw_rate", 0.0);
      spec.actors.push_back(actor);
    }
  } catch (const json::exception& e) {
    throw occgrid::FormatError(std::string("scene spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

occgrid::CorruptionSpec corruption_spec_from_json(const json& j) {
  occgrid::CorruptionSpec c;
  try {
    c.occ_flip_rate = j.value("occ_flip_rate", 0.0);
    c.flow_noise_sigma = j.value("flow_noise_sigma", 0.0);
    c.height_noise_sigma = j.value("height_noise_sigma", 0.0);
    c.spurious_blob_count = j.value("spurious_blob_count", 0);
    c.seed = j.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw occgrid::FormatError(std::string("corruption spec: ") + e.what());
  }
  c.validate();
  return c;
}

int cmd_simulate(const std::string& spec_path, const std::string& out_dir) {
  const json j = occgrid::load_json_file(spec_path);
  if (!j.contains("scene")) throw occgrid::FormatError("scene spec: missing \"scene\" object");
  const auto spec = scene_spec_from_json(j.at("scene"));
  occgrid::CorruptionSpec corruption;
  if (j.contains("corruption")) corruption = corruption_spec_from_json(j.at("corruption"));

  const auto frames = occgrid::generate_scene(spec);
  const auto labels =
      occgrid::generate_labels(frames.boxes, spec.cfg, spec.n_past, spec.n_future);
  const auto pred = occgrid::corrupt_predictions(labels, corruption, spec.cfg);

  fs::create_directories(out_dir);
  occgrid::write_poses_file(fs::path(out_dir) / "poses.json", frames.poses, spec.n_past);
  occgrid::write_labels_dir(fs::path(out_dir) / "gt", labels, spec.cfg);
  occgrid::write_predictions_dir(fs::path(out_dir) / "pred", pred, spec.cfg, spec.n_past,
                                 spec.n_future);
  std::cout << "wrote " << out_dir << " (" << spec.frame_count() << " frames, "
            << spec.actors.size() << " actors)\n";
  return 0;
}

int cmd_gen_labels(const std::string& boxes_path, const std::string& config_path,
                   const std::string& out_dir) {
  const json config = occgrid::load_json_file(config_path);
  if (!config.contains("voxel_config")) {
    throw occgrid::FormatError("config: missing \"voxel_config\"");
  }
  const auto cfg = occgrid::voxel_config_from_json(config.at("voxel_config"));
  int n_past = 0, n_future = 0;
  const auto boxes = occgrid::read_boxes_file(boxes_path, n_past, n_future);
  const auto labels = occgrid::generate_labels(boxes, cfg, n_past, n_future);
  occgrid::write_labels_dir(out_dir, labels, cfg);
  std::cout << "wrote " << out_dir << "\n";
  return 0;
}

int cmd_refine(const std::string& pred_dir, const std::string& config_path,
               const std::string& out_dir) {
  occgrid::NmsParams nms;
  double binarize = 0.5;
  if (!config_path.empty()) {
    const json config = occgrid::load_json_file(config_path);
    try {
      nms.threshold = config.value("nms_threshold", nms.threshold);
      nms.radius = config.value("nms_radius", nms.radius);
      binarize = config.value("binarize_threshold", binarize);
    } catch (const json::exception& e) {
      throw occgrid::FormatError(std::string("refine config: ") + e.what());
    }
  }
  occgrid::VoxelConfig cfg;
  int n_past = 0, n_future = 0;
  const auto pred = occgrid::read_predictions_dir(pred_dir, cfg, n_past, n_future);
  const auto refined =
      occgrid::refine_sequence(pred.bundle, pred.seg_prob_prev, nms, binarize, cfg);
  occgrid::write_refined_dir(out_dir, refined, pred.bundle.heights, cfg, n_past, n_future);
  std::cout << "wrote " << out_dir << "\n";
  return 0;
}

json report_to_json(const occgrid::MetricsReport& r, const occgrid::EvalParams& params) {
  json metrics;
  metrics["iou_bb"] = {{"current", r.iou_bb.current},
                       {"future", r.iou_bb.future},
                       {"all", r.iou_bb.all}};
  metrics["iou_fg"] = {{"current", r.iou_fg.current},
                       {"future", r.iou_fg.future},
                       {"all", r.iou_fg.all}};
  metrics["ciou"] = {
      {"current", r.ciou.current},
      {"future", r.ciou.future},
      {"all", r.ciou.all},
      {"mode", params.ciou_mode == occgrid::CiouMode::kLiteral ? "literal" : "union"},
      {"skipped_frames",
       {{"current", r.ciou.skipped_current},
        {"future", r.ciou.skipped_future},
        {"all", r.ciou.skipped_all}}}};
  metrics["vpq_bb"] = r.vpq_bb;
  metrics["vpq_fg"] = r.vpq_fg;
  return metrics;
}

int cmd_evaluate(const std::string& gt_dir, const std::string& pred_dir,
                 const std::string& window, const std::string& format,
                 const std::string& out_path, const std::string& ciou_mode) {
  occgrid::VoxelConfig gt_cfg, pred_cfg;
  const auto gt = occgrid::read_labels_dir(gt_dir, gt_cfg);
  int pred_future = 0;
  const auto pred = occgrid::read_refined_dir(pred_dir, pred_cfg, pred_future);
  occgrid::require(gt_cfg == pred_cfg, "evaluate: gt and pred voxel configs differ");
  occgrid::require(pred_future == gt.n_future, "evaluate: horizons differ");

  occgrid::EvalParams params;
  params.ciou_mode =
      ciou_mode == "union" ? occgrid::CiouMode::kUnionConsistent : occgrid::CiouMode::kLiteral;

  std::vector<occgrid::Grid3D<std::uint32_t>> pred_inst;
  for (int t = 0; t <= gt.n_future; ++t) {
    pred_inst.push_back(
        occgrid::lift_instances(pred.refined.instances[t], pred.heights[t], gt_cfg));
  }
  const auto report =
      occgrid::evaluate_sequence(gt, pred.refined.volumes, pred_inst, gt_cfg, params);

  json out;
  out["metrics"] = report_to_json(report, params);
  out["meta"] = {
      {"tool_version", kToolVersion},
      {"windows",
       {{"current", {{"t_start", 0}, {"t_end", 0}}},
        {"future", {{"t_start", 1}, {"t_end", gt.n_future}}},
        {"all", {{"t_start", 0}, {"t_end", gt.n_future}}}}},
      {"vpq_match_threshold", params.vpq_match_threshold},
      {"input_digests",
       {{"gt", occgrid::digest_directory(gt_dir)}, {"pred", occgrid::digest_directory(pred_dir)}}},
      {"timestamp", utc_timestamp()}};
  occgrid::save_json_file(out_path, out);

  const auto pick = [&](const occgrid::IouTriple& t) {
    return window == "current" ? t.current : window == "future" ? t.future : t.all;
  };
  const double iou = pick(format == "bb" ? report.iou_bb : report.iou_fg);
  const double ciou = window == "current"   ? report.ciou.current
                      : window == "future"  ? report.ciou.future
                                            : report.ciou.all;
  std::cout << "iou_" << format << "[" << window << "] = " << iou << "\n";
  std::cout << "ciou[" << window << "] = " << ciou << "\n";
  std::cout << "vpq_" << format << " = " << (format == "bb" ? report.vpq_bb : report.vpq_fg)
            << "\n";
  std::cout << "report: " << out_path << "\n";
  return 0;
}

int cmd_inspect(const std::string& path) {
  const auto raw = occgrid::read_grid(path);
  std::cout << "dtype: " << occgrid::dtype_name(raw.meta.dtype) << "\n";
  std::cout << "shape: [";
  for (std::size_t n = 0; n < raw.meta.shape.size(); ++n) {
    std::cout << (n ? "," : "") << raw.meta.shape[n];
  }
  std::cout << "]\naxes: [";
  for (std::size_t n = 0; n < raw.meta.axes.size(); ++n) {
    std::cout << (n ? "," : "") << raw.meta.axes[n];
  }
  std::cout << "]\npayload_bytes: " << raw.payload.size() << "\n";

  double mn = 0, mx = 0, mean = 0;
  std::int64_t nonzero = 0;
  const auto summarize = [&](const auto& values) {
    mn = mx = values.empty() ? 0.0 : static_cast<double>(values[0]);
    double sum = 0.0;
    for (const auto v : values) {
      const double d = static_cast<double>(v);
      mn = std::min(mn, d);
      mx = std::max(mx, d);
      sum += d;
      if (d != 0.0) ++nonzero;
    }
    mean = values.empty() ? 0.0 : sum / values.size();
  };
  switch (raw.meta.dtype) {
    case occgrid::GridDType::kU8: {
      occgrid::RawGrid copy = raw;
      summarize(copy.payload);
      break;
    }
    case occgrid::GridDType::kU32: {
      std::vector<std::uint32_t> v(raw.payload.size() / 4);
      for (std::size_t n = 0; n < v.size(); ++n) {
        std::memcpy(&v[n], raw.payload.data() + 4 * n, 4);
      }
      summarize(v);
      break;
    }
    case occgrid::GridDType::kF32: {
      std::vector<float> v(raw.payload.size() / 4);
      for (std::size_t n = 0; n < v.size(); ++n) {
        std::memcpy(&v[n], raw.payload.data() + 4 * n, 4);
      }
      summarize(v);
      break;
    }
  }
  std::cout << "min: " << mn << "\nmax: " << mx << "\nmean: " << mean
            << "\nnonzero: " << nonzero << "\n";
  if (raw.meta.voxel_config) {
    std::cout << "voxel_config: " << occgrid::to_json(*raw.meta.voxel_config).dump() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatiotemporally decoupled BEV occupancy forecasting toolkit"};
  app.require_subcommand(1);

  std::string spec_path, out_dir, boxes_path, config_path, pred_dir, gt_dir;
  std::string window = "all", format = "fg", report_path = "report.json", inspect_path;
  std::string ciou_mode = "literal";

  auto* simulate = app.add_subcommand("simulate", "Generate a scene, GT labels, and predictions");
  simulate->add_option("--spec", spec_path, "Scene + corruption spec JSON")->required();
  simulate->add_option("--out", out_dir, "Output directory")->required();

  auto* gen = app.add_subcommand("gen-labels", "Run the label pipeline over a box file");
  gen->add_option("--boxes", boxes_path, "Per-frame box list JSON")->required();
  gen->add_option("--config", config_path, "Config JSON with voxel_config")->required();
  gen->add_option("--out", out_dir, "Output directory")->required();

  auto* refine = app.add_subcommand("refine", "Refine a prediction directory");
  refine->add_option("--pred", pred_dir, "Predictions directory")->required();
  refine->add_option("--config", config_path, "NMS/threshold config JSON");
  refine->add_option("--out", out_dir, "Output directory")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Score refined predictions against GT");
  evaluate->add_option("--gt", gt_dir, "GT labels directory")->required();
  evaluate->add_option("--pred", pred_dir, "Refined predictions directory")->required();
  evaluate->add_option("--window", window, "Summary window")
      ->check(CLI::IsMember({"current", "future", "all"}));
  evaluate->add_option("--format", format, "Summary format")
      ->check(CLI::IsMember({"bb", "fg"}));
  evaluate->add_option("--ciou-mode", ciou_mode, "C-IoU denominator form")
      ->check(CLI::IsMember({"literal", "union"}));
  evaluate->add_option("--out", report_path, "Report JSON path");

  auto* inspect = app.add_subcommand("inspect", "Print a grid file header and stats");
  inspect->add_option("file", inspect_path, "Grid file")->required();

  try {
    app.parse(argc, argv);
    occgrid::apply_thread_cap();
    if (*simulate) return cmd_simulate(spec_path, out_dir);
    if (*gen) return cmd_gen_labels(boxes_path, config_path, out_dir);
    if (*refine) return cmd_refine(pred_dir, config_path, out_dir);
    if (*evaluate) {
      return cmd_evaluate(gt_dir, pred_dir, window, format, report_path, ciou_mode);
    }
    if (*inspect) return cmd_inspect(inspect_path);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 1;
  } catch (const occgrid::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const occgrid::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 2;
  } catch (const occgrid::InvariantError& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
