#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "occgrid/errors.hpp"

namespace occgrid {

// Metric extents and resolution of the voxel lattice. Axis convention:
// i <-> x (nx rows), j <-> y (ny cols), k <-> z (nz layers); storage is
// row-major with x outermost. Each voxel owns the half-open interval
// [lo, hi) on every axis, so a point exactly on an interior face belongs
// to the higher-index voxel.
struct VoxelConfig {
  double x_min = 0.0, x_max = 0.0;
  double y_min = 0.0, y_max = 0.0;
  double z_min = 0.0, z_max = 0.0;
  double resolution = 0.0;

  int nx() const { return span_cells(x_max - x_min); }
  int ny() const { return span_cells(y_max - y_min); }
  int nz() const { return span_cells(z_max - z_min); }

  // Throws InvariantError unless every span is a positive integer multiple
  // of the resolution (1e-9 relative tolerance) with at least one cell.
  void validate() const;

  bool operator==(const VoxelConfig&) const = default;

private:
  int span_cells(double span) const {
    return static_cast<int>(std::llround(span / resolution));
  }
};

struct Index3 {
  int i = 0, j = 0, k = 0;
  bool operator==(const Index3&) const = default;
};

struct Index2 {
  int i = 0, j = 0;
  bool operator==(const Index2&) const = default;
};

// Maps a continuous coordinate to its cell on one axis, or nullopt when
// outside [lo, lo + cells*res). Values within 1e-9 (relative) of a cell
// face are snapped onto it first so that points constructed on exact
// lattice faces land in the higher cell instead of drifting on fp dust.
std::optional<int> axis_cell(double coord, double lo, int cells, double res);

std::optional<Index3> world_to_index(const std::array<double, 3>& p,
                                     const VoxelConfig& cfg);
std::optional<Index2> world_to_index_2d(double x, double y,
                                        const VoxelConfig& cfg);

// Center of a voxel: min + (idx + 0.5) * resolution per axis.
// Out-of-range indices throw InvariantError.
std::array<double, 3> index_to_center(const Index3& idx,
                                      const VoxelConfig& cfg);
std::array<double, 2> index_to_center_2d(const Index2& idx,
                                         const VoxelConfig& cfg);

template <typename T>
class Grid2D {
public:
  Grid2D() = default;
  Grid2D(int rows, int cols, T init = T{})
      : rows_(rows), cols_(cols),
        data_(static_cast<std::size_t>(rows) * cols, init) {
    require(rows > 0 && cols > 0, "Grid2D dims must be positive");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool in_bounds(int i, int j) const {
    return i >= 0 && i < rows_ && j >= 0 && j < cols_;
  }

  T& at(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
  const T& at(int i, int j) const {
    return data_[static_cast<std::size_t>(i) * cols_ + j];
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool operator==(const Grid2D&) const = default;

private:
  int rows_ = 0, cols_ = 0;
  std::vector<T> data_;
};

template <typename T>
class Grid3D {
public:
  Grid3D() = default;
  Grid3D(int nx, int ny, int nz, T init = T{})
      : nx_(nx), ny_(ny), nz_(nz),
        data_(static_cast<std::size_t>(nx) * ny * nz, init) {
    require(nx > 0 && ny > 0 && nz > 0, "Grid3D dims must be positive");
  }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int nz() const { return nz_; }
  std::size_t size() const { return data_.size(); }
  bool in_bounds(int i, int j, int k) const {
    return i >= 0 && i < nx_ && j >= 0 && j < ny_ && k >= 0 && k < nz_;
  }

  T& at(int i, int j, int k) {
    return data_[(static_cast<std::size_t>(i) * ny_ + j) * nz_ + k];
  }
  const T& at(int i, int j, int k) const {
    return data_[(static_cast<std::size_t>(i) * ny_ + j) * nz_ + k];
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool operator==(const Grid3D&) const = default;

private:
  int nx_ = 0, ny_ = 0, nz_ = 0;
  std::vector<T> data_;
};

// Binary occupancy over the full lattice, values in {0,1}.
using Occupancy3D = Grid3D<std::uint8_t>;
// Binary occupancy over the BEV plane.
using BevOccupancy = Grid2D<std::uint8_t>;
// Per-cell instance IDs, 0 = background.
using InstanceMap = Grid2D<std::uint32_t>;
// Dense real-valued BEV grid (probabilities, predicted heights, ...).
using RealGrid2D = Grid2D<float>;

// Per-column height in meters with an explicit undefined state. The
// undefined state is a tagged mask, not a sentinel value, so the paired
// invariant against a BevOccupancy stays checkable.
class HeightMap {
public:
  HeightMap() = default;
  HeightMap(int rows, int cols)
      : value_(rows, cols, 0.0f), defined_(rows, cols, 0) {}

  int rows() const { return value_.rows(); }
  int cols() const { return value_.cols(); }

  bool has(int i, int j) const { return defined_.at(i, j) != 0; }
  std::optional<float> get(int i, int j) const {
    if (!has(i, j)) return std::nullopt;
    return value_.at(i, j);
  }
  void set(int i, int j, float h) {
    value_.at(i, j) = h;
    defined_.at(i, j) = 1;
  }
  void clear(int i, int j) {
    value_.at(i, j) = 0.0f;
    defined_.at(i, j) = 0;
  }

  const Grid2D<float>& values() const { return value_; }
  const Grid2D<std::uint8_t>& mask() const { return defined_; }

  bool operator==(const HeightMap&) const = default;

private:
  Grid2D<float> value_;
  Grid2D<std::uint8_t> defined_;
};

// (d_row, d_col) displacement per BEV cell, in grid cells.
struct FlowField {
  Grid2D<float> d_row;
  Grid2D<float> d_col;

  FlowField() = default;
  FlowField(int rows, int cols) : d_row(rows, cols, 0.0f), d_col(rows, cols, 0.0f) {}

  int rows() const { return d_row.rows(); }
  int cols() const { return d_row.cols(); }

  bool operator==(const FlowField&) const = default;
};

// Oriented movable-object box. size = (length, width, height) along the
// box frame's x/y/z before the yaw rotation about z.
struct Box3D {
  std::array<double, 3> center{};
  std::array<double, 3> size{};
  double yaw = 0.0;
  std::uint32_t instance_id = 1;

  void validate() const;

  // Point-in-box with inclusive faces.
  bool contains(double x, double y, double z) const;
  // z-ignored footprint test, inclusive edges.
  bool footprint_contains(double x, double y) const;
};

// Rigid transform of a frame's planar coordinates into the present (t=0)
// frame: p_present = R(yaw) * p + (tx, ty).
struct Pose2D {
  double tx = 0.0, ty = 0.0;
  double yaw = 0.0;

  static Pose2D identity() { return {}; }
  static double normalize_yaw(double yaw);

  std::array<double, 2> apply(double x, double y) const;
  std::array<double, 2> apply_inverse(double x, double y) const;

  bool operator==(const Pose2D&) const = default;
};

// Invariant checks used by tests and by the CLI before evaluation.
void validate_binary(const Occupancy3D& occ);
void validate_binary(const BevOccupancy& occ);
void validate_flow(const FlowField& flow);
void validate_heights(const HeightMap& heights, const VoxelConfig& cfg);
// Heights must be defined exactly where the occupancy is set.
void validate_paired(const HeightMap& heights, const BevOccupancy& bev);

}  // namespace occgrid
