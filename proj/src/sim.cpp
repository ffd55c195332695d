#include "occgrid/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace occgrid {

void ActorSpec::validate() const {
  box.validate();
  require(std::isfinite(vx) && std::isfinite(vy) && std::isfinite(yaw_rate),
          "ActorSpec: non-finite kinematics");
}

void SceneSpec::validate() const {
  cfg.validate();
  require(frame_dt > 0.0, "SceneSpec: frame_dt must be positive");
  require(n_past >= 0 && n_future >= 0, "SceneSpec: negative horizon");
  require(std::isfinite(ego_vx) && std::isfinite(ego_vy), "SceneSpec: non-finite ego velocity");
  for (const auto& a : actors) a.validate();
}

void CorruptionSpec::validate() const {
  require(occ_flip_rate >= 0.0 && occ_flip_rate <= 1.0,
          "CorruptionSpec: occ_flip_rate must be in [0,1]");
  require(flow_noise_sigma >= 0.0 && height_noise_sigma >= 0.0,
          "CorruptionSpec: noise sigmas must be non-negative");
  require(spurious_blob_count >= 0, "CorruptionSpec: negative blob count");
}

SceneFrames generate_scene(const SceneSpec& spec) {
  spec.validate();
  SceneFrames out;
  const int n_frames = spec.frame_count();
  out.boxes.resize(n_frames);
  out.poses.resize(n_frames);
  for (int n = 0; n < n_frames; ++n) {
    const double elapsed = n * spec.frame_dt;  // since the first frame
    for (const auto& actor : spec.actors) {
      Box3D box = actor.box;
      box.center[0] += actor.vx * elapsed;
      box.center[1] += actor.vy * elapsed;
      box.yaw = Pose2D::normalize_yaw(box.yaw + actor.yaw_rate * elapsed);
      out.boxes[n].push_back(box);
    }
    // Ego-local -> present transform; the ego travels at constant velocity
    // and heading, so this is a pure translation.
    const double t_rel = (n - spec.n_past) * spec.frame_dt;
    out.poses[n] = Pose2D{spec.ego_vx * t_rel, spec.ego_vy * t_rel, 0.0};
  }
  return out;
}

namespace {

void flip_to_probs(const BevOccupancy& bev, double flip_rate, std::mt19937_64& rng,
                   RealGrid2D& out) {
  std::bernoulli_distribution flip(flip_rate);
  for (int i = 0; i < bev.rows(); ++i) {
    for (int j = 0; j < bev.cols(); ++j) {
      bool occ = bev.at(i, j) != 0;
      if (flip_rate > 0.0 && flip(rng)) occ = !occ;
      out.at(i, j) = occ ? 0.9f : 0.1f;
    }
  }
}

}  // namespace

CorruptedPredictions corrupt_predictions(const LabeledSequence& gt, const CorruptionSpec& c,
                                         const VoxelConfig& cfg) {
  c.validate();
  require(gt.n_past >= 1, "corrupt_predictions: needs an observed frame at t=-1");
  const int rows = cfg.nx();
  const int cols = cfg.ny();
  std::mt19937_64 rng(c.seed);

  CorruptedPredictions out;
  out.seg_prob_prev = RealGrid2D(rows, cols, 0.0f);
  flip_to_probs(gt.frame_at(-1).occ_bev, c.occ_flip_rate, rng, out.seg_prob_prev);

  std::normal_distribution<double> flow_noise(0.0, c.flow_noise_sigma);
  std::normal_distribution<double> height_noise(0.0, c.height_noise_sigma);
  const double flow_bound = std::max(rows, cols);

  for (int t = 0; t <= gt.n_future; ++t) {
    const auto& frame = gt.frame_at(t);

    RealGrid2D probs(rows, cols, 0.0f);
    flip_to_probs(frame.occ_bev, c.occ_flip_rate, rng, probs);
    out.bundle.initial_occ.push_back(std::move(probs));

    FlowField flow = gt.flows[t];
    if (c.flow_noise_sigma > 0.0) {
      for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
          const double dr = flow.d_row.at(i, j) + flow_noise(rng);
          const double dc = flow.d_col.at(i, j) + flow_noise(rng);
          flow.d_row.at(i, j) = static_cast<float>(std::clamp(dr, -flow_bound, flow_bound));
          flow.d_col.at(i, j) = static_cast<float>(std::clamp(dc, -flow_bound, flow_bound));
        }
      }
    }
    out.bundle.flows.push_back(std::move(flow));

    RealGrid2D heights(rows, cols, static_cast<float>(cfg.z_min));
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        if (const auto h = frame.heights.get(i, j)) heights.at(i, j) = *h;
        if (c.height_noise_sigma > 0.0) {
          heights.at(i, j) = static_cast<float>(heights.at(i, j) + height_noise(rng));
        }
      }
    }
    out.bundle.heights.push_back(std::move(heights));
  }

  if (c.spurious_blob_count > 0) {
    require(rows >= 3 && cols >= 3, "corrupt_predictions: grid too small for blobs");
    std::uniform_int_distribution<int> frame_pick(0, gt.n_future);
    std::uniform_int_distribution<int> row_pick(1, rows - 2);
    std::uniform_int_distribution<int> col_pick(1, cols - 2);
    for (int b = 0; b < c.spurious_blob_count; ++b) {
      const int t = frame_pick(rng);
      const int r = row_pick(rng);
      const int cc = col_pick(rng);
      for (int di = -1; di <= 1; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          out.bundle.initial_occ[t].at(r + di, cc + dj) = 0.9f;
        }
      }
    }
  }
  return out;
}

SceneSpec make_random_scene(const VoxelConfig& cfg, int n_past, int n_future, double frame_dt,
                            int n_actors, std::uint64_t seed) {
  cfg.validate();
  require(n_actors >= 0, "make_random_scene: negative actor count");
  SceneSpec spec;
  spec.cfg = cfg;
  spec.n_past = n_past;
  spec.n_future = n_future;
  spec.frame_dt = frame_dt;
  spec.seed = seed;

  std::mt19937_64 rng(seed);
  const double total_time = (spec.frame_count() - 1) * frame_dt;
  const double z_span = cfg.z_max - cfg.z_min;
  const double span = std::min(cfg.x_max - cfg.x_min, cfg.y_max - cfg.y_min);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  // Geometry and speed scale with the lattice so scenes stay placeable
  // on small desk grids and roomy on large ones.
  const double max_speed = std::min(2.0, total_time > 0.0 ? 0.1 * span / total_time : 2.0);
  const double clearance = std::max(0.05 * span, 5.0 * cfg.resolution);
  const double border = 2.0 * cfg.resolution;

  for (int a = 0; a < n_actors; ++a) {
    for (int attempt = 0; attempt < 256; ++attempt) {
      ActorSpec actor;
      actor.box.size[0] = span * (0.08 + 0.10 * u01(rng));
      actor.box.size[1] = span * (0.05 + 0.05 * u01(rng));
      actor.box.size[2] = z_span * (0.4 + 0.5 * u01(rng));
      actor.box.yaw = Pose2D::normalize_yaw(2.0 * 3.14159265358979323846 * u01(rng));
      actor.box.instance_id = static_cast<std::uint32_t>(a + 1);
      actor.vx = max_speed * (2.0 * u01(rng) - 1.0);
      actor.vy = max_speed * (2.0 * u01(rng) - 1.0);
      actor.yaw_rate = 0.2 * (2.0 * u01(rng) - 1.0);
      // Boxes rest on the lattice floor so the envelope and the
      // height-lifted grids coincide.
      actor.box.center[2] = cfg.z_min + 0.5 * actor.box.size[2];

      const double half_diag = 0.5 * std::hypot(actor.box.size[0], actor.box.size[1]);
      const auto place = [&](double lo, double hi, double v) -> std::optional<double> {
        double p_lo = lo + half_diag + border;
        double p_hi = hi - half_diag - border;
        if (v > 0.0) p_hi -= v * total_time;
        if (v < 0.0) p_lo -= v * total_time;
        if (p_lo >= p_hi) return std::nullopt;
        return p_lo + (p_hi - p_lo) * u01(rng);
      };
      const auto cx = place(cfg.x_min, cfg.x_max, actor.vx);
      const auto cy = place(cfg.y_min, cfg.y_max, actor.vy);
      if (!cx || !cy) continue;
      actor.box.center[0] = *cx;
      actor.box.center[1] = *cy;

      bool separated = true;
      for (const auto& other : spec.actors) {
        const double other_diag = 0.5 * std::hypot(other.box.size[0], other.box.size[1]);
        for (int n = 0; n < spec.frame_count() && separated; ++n) {
          const double e = n * frame_dt;
          const double dx = (actor.box.center[0] + actor.vx * e) -
                            (other.box.center[0] + other.vx * e);
          const double dy = (actor.box.center[1] + actor.vy * e) -
                            (other.box.center[1] + other.vy * e);
          if (std::hypot(dx, dy) < half_diag + other_diag + clearance) separated = false;
        }
        if (!separated) break;
      }
      if (!separated) continue;
      spec.actors.push_back(actor);
      break;
    }
  }
  return spec;
}

}  // namespace occgrid
