#include "occgrid/dataset.hpp"

#include <algorithm>
#include <cstdlib>

namespace occgrid {

namespace fs = std::filesystem;

void write_manifest(const fs::path& dir, const Manifest& m) {
  nlohmann::json j;
  j["kind"] = m.kind;
  j["voxel_config"] = to_json(m.cfg);
  j["n_past"] = m.n_past;
  j["n_future"] = m.n_future;
  save_json_file(dir / kManifestName, j);
}

Manifest read_manifest(const fs::path& dir) {
  const auto j = load_json_file(dir / kManifestName);
  Manifest m;
  try {
    m.kind = j.at("kind").get<std::string>();
    m.cfg = voxel_config_from_json(j.at("voxel_config"));
    m.n_past = j.at("n_past").get<int>();
    m.n_future = j.at("n_future").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  require(m.n_past >= 0 && m.n_future >= 0, "manifest: negative horizon");
  return m;
}

std::string frame_tag(int t) {
  return (t < 0 ? "m" : "p") + std::to_string(std::abs(t));
}

void write_boxes_file(const fs::path& path,
                      const std::vector<std::vector<Box3D>>& boxes_per_frame, int n_past,
                      int n_future) {
  nlohmann::json frames = nlohmann::json::array();
  for (std::size_t n = 0; n < boxes_per_frame.size(); ++n) {
    nlohmann::json frame;
    frame["t"] = static_cast<int>(n) - n_past;
    nlohmann::json boxes = nlohmann::json::array();
    for (const auto& box : boxes_per_frame[n]) boxes.push_back(to_json(box));
    frame["boxes"] = std::move(boxes);
    frames.push_back(std::move(frame));
  }
  nlohmann::json j;
  j["n_past"] = n_past;
  j["n_future"] = n_future;
  j["frames"] = std::move(frames);
  save_json_file(path, j);
}

std::vector<std::vector<Box3D>> read_boxes_file(const fs::path& path, int& n_past,
                                                int& n_future) {
  const auto j = load_json_file(path);
  std::vector<std::vector<Box3D>> out;
  try {
    n_past = j.at("n_past").get<int>();
    n_future = j.at("n_future").get<int>();
    for (const auto& frame : j.at("frames")) {
      std::vector<Box3D> boxes;
      for (const auto& b : frame.at("boxes")) boxes.push_back(box_from_json(b));
      out.push_back(std::move(boxes));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("boxes file: ") + e.what());
  }
  require(static_cast<int>(out.size()) == n_past + n_future + 1,
          "boxes file: frame count does not match horizon");
  return out;
}

void write_poses_file(const fs::path& path, const std::vector<Pose2D>& poses, int n_past) {
  nlohmann::json frames = nlohmann::json::array();
  for (std::size_t n = 0; n < poses.size(); ++n) {
    nlohmann::json f = to_json(poses[n]);
    f["t"] = static_cast<int>(n) - n_past;
    frames.push_back(std::move(f));
  }
  nlohmann::json j;
  j["frames"] = std::move(frames);
  save_json_file(path, j);
}

std::vector<Pose2D> read_poses_file(const fs::path& path) {
  const auto j = load_json_file(path);
  std::vector<Pose2D> out;
  try {
    for (const auto& f : j.at("frames")) out.push_back(pose_from_json(f));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("poses file: ") + e.what());
  }
  return out;
}

void write_labels_dir(const fs::path& dir, const LabeledSequence& seq, const VoxelConfig& cfg) {
  fs::create_directories(dir);
  write_manifest(dir, {"labels", cfg, seq.n_past, seq.n_future});
  write_boxes_file(dir / "boxes.json", seq.boxes, seq.n_past, seq.n_future);
  for (int t = -seq.n_past; t <= seq.n_future; ++t) {
    const auto& f = seq.frame_at(t);
    const std::string tag = frame_tag(t);
    write_grid(dir / ("occ_bb_" + tag + ".sgrd"), pack(f.occ_bb, cfg));
    write_grid(dir / ("occ_bev_" + tag + ".sgrd"), pack(f.occ_bev, cfg));
    write_grid(dir / ("heights_" + tag + ".sgrd"), pack(f.heights, cfg));
    write_grid(dir / ("occ_fg_" + tag + ".sgrd"), pack(f.occ_fg, cfg));
    write_grid(dir / ("instances_" + tag + ".sgrd"), pack(f.instances, cfg));
  }
  for (int t = 0; t <= seq.n_future; ++t) {
    write_grid(dir / ("flow_" + frame_tag(t) + ".sgrd"), pack(seq.flows[t], cfg));
  }
}

LabeledSequence read_labels_dir(const fs::path& dir, VoxelConfig& cfg) {
  const Manifest m = read_manifest(dir);
  require(m.kind == "labels", "expected a labels directory at " + dir.string());
  cfg = m.cfg;
  LabeledSequence seq;
  seq.n_past = m.n_past;
  seq.n_future = m.n_future;
  int n_past = 0, n_future = 0;
  seq.boxes = read_boxes_file(dir / "boxes.json", n_past, n_future);
  require(n_past == m.n_past && n_future == m.n_future,
          "labels dir: boxes.json horizon differs from manifest");
  for (int t = -m.n_past; t <= m.n_future; ++t) {
    const std::string tag = frame_tag(t);
    LabeledFrame f;
    f.occ_bb = unpack_occupancy3d(read_grid(dir / ("occ_bb_" + tag + ".sgrd")));
    f.occ_bev = unpack_bev(read_grid(dir / ("occ_bev_" + tag + ".sgrd")));
    f.heights = unpack_heights(read_grid(dir / ("heights_" + tag + ".sgrd")));
    f.occ_fg = unpack_occupancy3d(read_grid(dir / ("occ_fg_" + tag + ".sgrd")));
    f.instances = unpack_instance_map(read_grid(dir / ("instances_" + tag + ".sgrd")));
    seq.frames.push_back(std::move(f));
  }
  for (int t = 0; t <= m.n_future; ++t) {
    seq.flows.push_back(unpack_flow(read_grid(dir / ("flow_" + frame_tag(t) + ".sgrd"))));
  }
  return seq;
}

void write_predictions_dir(const fs::path& dir, const CorruptedPredictions& pred,
                           const VoxelConfig& cfg, int n_past, int n_future) {
  fs::create_directories(dir);
  write_manifest(dir, {"predictions", cfg, n_past, n_future});
  write_grid(dir / "seg_prob_m1.sgrd", pack(pred.seg_prob_prev, cfg));
  for (int t = 0; t <= n_future; ++t) {
    const std::string tag = frame_tag(t);
    write_grid(dir / ("init_occ_" + tag + ".sgrd"), pack(pred.bundle.initial_occ[t], cfg));
    write_grid(dir / ("flow_" + tag + ".sgrd"), pack(pred.bundle.flows[t], cfg));
    write_grid(dir / ("heights_" + tag + ".sgrd"), pack(pred.bundle.heights[t], cfg));
  }
}

CorruptedPredictions read_predictions_dir(const fs::path& dir, VoxelConfig& cfg, int& n_past,
                                          int& n_future) {
  const Manifest m = read_manifest(dir);
  require(m.kind == "predictions", "expected a predictions directory at " + dir.string());
  cfg = m.cfg;
  n_past = m.n_past;
  n_future = m.n_future;
  CorruptedPredictions pred;
  pred.seg_prob_prev = unpack_real2d(read_grid(dir / "seg_prob_m1.sgrd"));
  for (int t = 0; t <= m.n_future; ++t) {
    const std::string tag = frame_tag(t);
    pred.bundle.initial_occ.push_back(
        unpack_real2d(read_grid(dir / ("init_occ_" + tag + ".sgrd"))));
    pred.bundle.flows.push_back(unpack_flow(read_grid(dir / ("flow_" + tag + ".sgrd"))));
    pred.bundle.heights.push_back(
        unpack_real2d(read_grid(dir / ("heights_" + tag + ".sgrd"))));
  }
  return pred;
}

void write_refined_dir(const fs::path& dir, const RefinedSequence& refined,
                       const std::vector<RealGrid2D>& pred_heights, const VoxelConfig& cfg,
                       int n_past, int n_future) {
  fs::create_directories(dir);
  write_manifest(dir, {"refined", cfg, n_past, n_future});
  for (int t = 0; t <= n_future; ++t) {
    const std::string tag = frame_tag(t);
    write_grid(dir / ("refined_bev_" + tag + ".sgrd"), pack(refined.bev[t], cfg));
    write_grid(dir / ("instances_" + tag + ".sgrd"), pack(refined.instances[t], cfg));
    write_grid(dir / ("refined_3d_" + tag + ".sgrd"), pack(refined.volumes[t], cfg));
    write_grid(dir / ("heights_" + tag + ".sgrd"), pack(pred_heights[t], cfg));
  }
}

RefinedOnDisk read_refined_dir(const fs::path& dir, VoxelConfig& cfg, int& n_future) {
  const Manifest m = read_manifest(dir);
  require(m.kind == "refined", "expected a refined directory at " + dir.string());
  cfg = m.cfg;
  n_future = m.n_future;
  RefinedOnDisk out;
  for (int t = 0; t <= m.n_future; ++t) {
    const std::string tag = frame_tag(t);
    out.refined.bev.push_back(unpack_bev(read_grid(dir / ("refined_bev_" + tag + ".sgrd"))));
    out.refined.instances.push_back(
        unpack_instance_map(read_grid(dir / ("instances_" + tag + ".sgrd"))));
    out.refined.volumes.push_back(
        unpack_occupancy3d(read_grid(dir / ("refined_3d_" + tag + ".sgrd"))));
    out.heights.push_back(unpack_real2d(read_grid(dir / ("heights_" + tag + ".sgrd"))));
  }
  return out;
}

nlohmann::json digest_directory(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  nlohmann::json out = nlohmann::json::object();
  for (const auto& f : files) {
    out[fs::relative(f, dir).generic_string()] = sha256_file(f);
  }
  return out;
}

}  // namespace occgrid
