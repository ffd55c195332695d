#include "occgrid/grid.hpp"

#include <cmath>

namespace occgrid {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Relative tolerance for lattice arithmetic on metric extents.
constexpr double kLatticeTol = 1e-9;

void check_axis(double lo, double hi, double res, const char* name) {
  const double span = hi - lo;
  require(span > 0.0, std::string("VoxelConfig: empty extent on ") + name);
  const double cells = span / res;
  const double rounded = std::nearbyint(cells);
  require(rounded >= 1.0, std::string("VoxelConfig: less than one cell on ") + name);
  require(std::abs(cells - rounded) <= kLatticeTol * cells,
          std::string("VoxelConfig: extent not a multiple of resolution on ") + name);
}

}  // namespace

void VoxelConfig::validate() const {
  require(resolution > 0.0, "VoxelConfig: resolution must be positive");
  check_axis(x_min, x_max, resolution, "x");
  check_axis(y_min, y_max, resolution, "y");
  check_axis(z_min, z_max, resolution, "z");
}

std::optional<int> axis_cell(double coord, double lo, int cells, double res) {
  double u = (coord - lo) / res;
  const double snapped = std::nearbyint(u);
  if (std::abs(u - snapped) <= kLatticeTol * std::max(1.0, std::abs(u))) {
    u = snapped;
  }
  const double cell = std::floor(u);
  if (cell < 0.0 || cell >= static_cast<double>(cells)) return std::nullopt;
  return static_cast<int>(cell);
}

std::optional<Index3> world_to_index(const std::array<double, 3>& p,
                                     const VoxelConfig& cfg) {
  const auto i = axis_cell(p[0], cfg.x_min, cfg.nx(), cfg.resolution);
  const auto j = axis_cell(p[1], cfg.y_min, cfg.ny(), cfg.resolution);
  const auto k = axis_cell(p[2], cfg.z_min, cfg.nz(), cfg.resolution);
  if (!i || !j || !k) return std::nullopt;
  return Index3{*i, *j, *k};
}

std::optional<Index2> world_to_index_2d(double x, double y,
                                        const VoxelConfig& cfg) {
  const auto i = axis_cell(x, cfg.x_min, cfg.nx(), cfg.resolution);
  const auto j = axis_cell(y, cfg.y_min, cfg.ny(), cfg.resolution);
  if (!i || !j) return std::nullopt;
  return Index2{*i, *j};
}

std::array<double, 3> index_to_center(const Index3& idx, const VoxelConfig& cfg) {
  require(idx.i >= 0 && idx.i < cfg.nx() && idx.j >= 0 && idx.j < cfg.ny() &&
              idx.k >= 0 && idx.k < cfg.nz(),
          "index_to_center: index outside grid dims");
  return {cfg.x_min + (idx.i + 0.5) * cfg.resolution,
          cfg.y_min + (idx.j + 0.5) * cfg.resolution,
          cfg.z_min + (idx.k + 0.5) * cfg.resolution};
}

std::array<double, 2> index_to_center_2d(const Index2& idx, const VoxelConfig& cfg) {
  require(idx.i >= 0 && idx.i < cfg.nx() && idx.j >= 0 && idx.j < cfg.ny(),
          "index_to_center_2d: index outside grid dims");
  return {cfg.x_min + (idx.i + 0.5) * cfg.resolution,
          cfg.y_min + (idx.j + 0.5) * cfg.resolution};
}

void Box3D::validate() const {
  require(size[0] > 0.0 && size[1] > 0.0 && size[2] > 0.0,
          "Box3D: all size components must be positive");
  require(instance_id >= 1, "Box3D: instance_id must be >= 1");
  require(std::isfinite(center[0]) && std::isfinite(center[1]) &&
              std::isfinite(center[2]) && std::isfinite(yaw),
          "Box3D: non-finite pose");
}

bool Box3D::contains(double x, double y, double z) const {
  const double dz = z - center[2];
  if (std::abs(dz) > 0.5 * size[2]) return false;
  return footprint_contains(x, y);
}

bool Box3D::footprint_contains(double x, double y) const {
  const double dx = x - center[0];
  const double dy = y - center[1];
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  // Rotate the offset into the box frame.
  const double bx = c * dx + s * dy;
  const double by = -s * dx + c * dy;
  return std::abs(bx) <= 0.5 * size[0] && std::abs(by) <= 0.5 * size[1];
}

double Pose2D::normalize_yaw(double yaw) {
  double y = std::fmod(yaw + kPi, 2.0 * kPi);
  if (y <= 0.0) y += 2.0 * kPi;
  return y - kPi;
}

std::array<double, 2> Pose2D::apply(double x, double y) const {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  return {c * x - s * y + tx, s * x + c * y + ty};
}

std::array<double, 2> Pose2D::apply_inverse(double x, double y) const {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  const double dx = x - tx;
  const double dy = y - ty;
  return {c * dx + s * dy, -s * dx + c * dy};
}

void validate_binary(const Occupancy3D& occ) {
  for (const auto v : occ.data()) {
    require(v <= 1, "occupancy grid: values must be 0 or 1");
  }
}

void validate_binary(const BevOccupancy& occ) {
  for (const auto v : occ.data()) {
    require(v <= 1, "occupancy grid: values must be 0 or 1");
  }
}

void validate_flow(const FlowField& flow) {
  const double bound = std::max(flow.rows(), flow.cols());
  for (const auto& plane : {flow.d_row, flow.d_col}) {
    for (const auto v : plane.data()) {
      require(std::isfinite(v), "flow field: non-finite displacement");
      require(std::abs(v) <= bound, "flow field: displacement exceeds grid size");
    }
  }
}

void validate_heights(const HeightMap& heights, const VoxelConfig& cfg) {
  for (int i = 0; i < heights.rows(); ++i) {
    for (int j = 0; j < heights.cols(); ++j) {
      if (const auto h = heights.get(i, j)) {
        require(*h > cfg.z_min && *h <= cfg.z_max,
                "height map: defined height outside (z_min, z_max]");
      }
    }
  }
}

void validate_paired(const HeightMap& heights, const BevOccupancy& bev) {
  require(heights.rows() == bev.rows() && heights.cols() == bev.cols(),
          "height map: dims differ from paired occupancy");
  for (int i = 0; i < bev.rows(); ++i) {
    for (int j = 0; j < bev.cols(); ++j) {
      require(heights.has(i, j) == (bev.at(i, j) != 0),
              "height map: defined set differs from occupied set");
    }
  }
}

}  // namespace occgrid
