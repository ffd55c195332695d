#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "occgrid/errors.hpp"
#include "occgrid/grid.hpp"

namespace occgrid {

// Binary grid container: magic "SGRD", u32 LE version (=1), u32 LE header
// length, UTF-8 JSON header, then the raw little-endian payload, row-major
// in the declared axis order.
inline constexpr char kGridMagic[4] = {'S', 'G', 'R', 'D'};
inline constexpr std::uint32_t kGridVersion = 1;

enum class GridDType { kU8, kU32, kF32 };

std::size_t dtype_size(GridDType t);
std::string dtype_name(GridDType t);
GridDType dtype_from_name(const std::string& name);

class GridFileError : public FormatError {
public:
  enum class Kind {
    kIo,
    kBadMagic,
    kVersionMismatch,
    kLengthMismatch,
    kMalformedHeader,
  };

  GridFileError(Kind kind, const std::string& msg) : FormatError(msg), kind_(kind) {}
  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

struct GridMeta {
  GridDType dtype = GridDType::kU8;
  std::vector<std::int64_t> shape;
  std::vector<std::string> axes;
  std::optional<VoxelConfig> voxel_config;

  std::int64_t cell_count() const;
  bool operator==(const GridMeta&) const = default;
};

struct RawGrid {
  GridMeta meta;
  std::vector<unsigned char> payload;

  bool operator==(const RawGrid&) const = default;
};

void write_grid(const std::filesystem::path& path, const RawGrid& grid);
RawGrid read_grid(const std::filesystem::path& path);

// Typed packing. Shapes follow the in-memory axis order: 3D grids are
// ["h","w","l"], BEV grids ["h","w"], two-plane fields ["c","h","w"].
// Height maps store the value plane in channel 0 and the definedness
// mask in channel 1.
RawGrid pack(const Occupancy3D& g, const std::optional<VoxelConfig>& cfg);
RawGrid pack(const Grid3D<std::uint32_t>& g, const std::optional<VoxelConfig>& cfg);
RawGrid pack(const BevOccupancy& g, const std::optional<VoxelConfig>& cfg);
RawGrid pack(const InstanceMap& g, const std::optional<VoxelConfig>& cfg);
RawGrid pack(const RealGrid2D& g, const std::optional<VoxelConfig>& cfg);
RawGrid pack(const HeightMap& g, const std::optional<VoxelConfig>& cfg);
RawGrid pack(const FlowField& g, const std::optional<VoxelConfig>& cfg);

Occupancy3D unpack_occupancy3d(const RawGrid& raw);
Grid3D<std::uint32_t> unpack_instance_volume(const RawGrid& raw);
BevOccupancy unpack_bev(const RawGrid& raw);
InstanceMap unpack_instance_map(const RawGrid& raw);
RealGrid2D unpack_real2d(const RawGrid& raw);
HeightMap unpack_heights(const RawGrid& raw);
FlowField unpack_flow(const RawGrid& raw);

// Lowercase hex SHA-256.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_bytes(const unsigned char* data, std::size_t len);

// JSON codecs for the config and scene file formats.
nlohmann::json to_json(const VoxelConfig& cfg);
nlohmann::json to_json(const Box3D& box);
nlohmann::json to_json(const Pose2D& pose);
VoxelConfig voxel_config_from_json(const nlohmann::json& j);
Box3D box_from_json(const nlohmann::json& j);
Pose2D pose_from_json(const nlohmann::json& j);

nlohmann::json load_json_file(const std::filesystem::path& path);
void save_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace occgrid
