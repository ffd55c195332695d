#include "occgrid/grid_io.hpp"

#include <cstring>
#include <fstream>

#include <openssl/evp.h>

namespace occgrid {

namespace {

using Kind = GridFileError::Kind;

void put_u32_le(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

std::uint32_t get_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

template <typename T>
void append_le(std::vector<unsigned char>& out, const std::vector<T>& values) {
  static_assert(sizeof(T) == 1 || sizeof(T) == 4);
  if constexpr (sizeof(T) == 1) {
    out.insert(out.end(), values.begin(), values.end());
  } else {
    out.reserve(out.size() + values.size() * 4);
    for (const T v : values) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, 4);
      put_u32_le(out, bits);
    }
  }
}

template <typename T>
std::vector<T> read_le(const std::vector<unsigned char>& payload) {
  static_assert(sizeof(T) == 1 || sizeof(T) == 4);
  if constexpr (sizeof(T) == 1) {
    return std::vector<T>(payload.begin(), payload.end());
  } else {
    std::vector<T> values(payload.size() / 4);
    for (std::size_t n = 0; n < values.size(); ++n) {
      const std::uint32_t bits = get_u32_le(payload.data() + 4 * n);
      std::memcpy(&values[n], &bits, 4);
    }
    return values;
  }
}

nlohmann::json meta_to_json(const GridMeta& meta) {
  nlohmann::json j;
  j["dtype"] = dtype_name(meta.dtype);
  j["shape"] = meta.shape;
  j["axes"] = meta.axes;
  j["voxel_config"] = meta.voxel_config ? to_json(*meta.voxel_config) : nlohmann::json(nullptr);
  return j;
}

GridMeta meta_from_json(const nlohmann::json& j) {
  GridMeta meta;
  try {
    meta.dtype = dtype_from_name(j.at("dtype").get<std::string>());
    meta.shape = j.at("shape").get<std::vector<std::int64_t>>();
    meta.axes = j.at("axes").get<std::vector<std::string>>();
    const auto& vc = j.at("voxel_config");
    if (!vc.is_null()) meta.voxel_config = voxel_config_from_json(vc);
  } catch (const nlohmann::json::exception& e) {
    throw GridFileError(Kind::kMalformedHeader,
                        std::string("grid header: missing or mistyped field: ") + e.what());
  }
  if (meta.shape.empty()) {
    throw GridFileError(Kind::kMalformedHeader, "grid header: empty shape");
  }
  for (const auto d : meta.shape) {
    if (d <= 0) throw GridFileError(Kind::kMalformedHeader, "grid header: non-positive dim");
  }
  if (meta.axes.size() != meta.shape.size()) {
    throw GridFileError(Kind::kMalformedHeader, "grid header: axes do not match shape rank");
  }
  return meta;
}

void expect_rank(const RawGrid& raw, std::size_t rank, GridDType dtype, const char* what) {
  if (raw.meta.shape.size() != rank || raw.meta.dtype != dtype) {
    throw FormatError(std::string("grid payload is not a ") + what);
  }
}

int dim(const RawGrid& raw, std::size_t axis) {
  return static_cast<int>(raw.meta.shape[axis]);
}

}  // namespace

std::size_t dtype_size(GridDType t) {
  switch (t) {
    case GridDType::kU8:
      return 1;
    case GridDType::kU32:
    case GridDType::kF32:
      return 4;
  }
  return 0;
}

std::string dtype_name(GridDType t) {
  switch (t) {
    case GridDType::kU8:
      return "u8";
    case GridDType::kU32:
      return "u32";
    case GridDType::kF32:
      return "f32";
  }
  return "?";
}

GridDType dtype_from_name(const std::string& name) {
  if (name == "u8") return GridDType::kU8;
  if (name == "u32") return GridDType::kU32;
  if (name == "f32") return GridDType::kF32;
  throw GridFileError(Kind::kMalformedHeader, "grid header: unknown dtype: " + name);
}

std::int64_t GridMeta::cell_count() const {
  std::int64_t n = 1;
  for (const auto d : shape) n *= d;
  return n;
}

void write_grid(const std::filesystem::path& path, const RawGrid& grid) {
  const std::int64_t expected =
      grid.meta.cell_count() * static_cast<std::int64_t>(dtype_size(grid.meta.dtype));
  require(static_cast<std::int64_t>(grid.payload.size()) == expected,
          "write_grid: payload size does not match shape");
  const std::string header = meta_to_json(grid.meta).dump();

  std::vector<unsigned char> bytes;
  bytes.reserve(12 + header.size() + grid.payload.size());
  bytes.insert(bytes.end(), kGridMagic, kGridMagic + 4);
  put_u32_le(bytes, kGridVersion);
  put_u32_le(bytes, static_cast<std::uint32_t>(header.size()));
  bytes.insert(bytes.end(), header.begin(), header.end());
  bytes.insert(bytes.end(), grid.payload.begin(), grid.payload.end());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw GridFileError(Kind::kIo, "write_grid: cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw GridFileError(Kind::kIo, "write_grid: short write to " + path.string());
}

RawGrid read_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw GridFileError(Kind::kIo, "read_grid: cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());

  if (bytes.size() < 12 || std::memcmp(bytes.data(), kGridMagic, 4) != 0) {
    throw GridFileError(Kind::kBadMagic, "read_grid: bad magic in " + path.string());
  }
  const std::uint32_t version = get_u32_le(bytes.data() + 4);
  if (version != kGridVersion) {
    throw GridFileError(Kind::kVersionMismatch,
                        "read_grid: unsupported version " + std::to_string(version));
  }
  const std::uint32_t header_len = get_u32_le(bytes.data() + 8);
  if (bytes.size() < 12 + static_cast<std::size_t>(header_len)) {
    throw GridFileError(Kind::kLengthMismatch, "read_grid: truncated header");
  }
  nlohmann::json header_json;
  try {
    header_json = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw GridFileError(Kind::kMalformedHeader,
                        std::string("read_grid: malformed header JSON: ") + e.what());
  }

  RawGrid grid;
  grid.meta = meta_from_json(header_json);
  const std::size_t expected =
      static_cast<std::size_t>(grid.meta.cell_count()) * dtype_size(grid.meta.dtype);
  const std::size_t actual = bytes.size() - 12 - header_len;
  if (actual != expected) {
    throw GridFileError(Kind::kLengthMismatch,
                        "read_grid: payload length " + std::to_string(actual) + ", expected " +
                            std::to_string(expected));
  }
  grid.payload.assign(bytes.begin() + 12 + header_len, bytes.end());
  return grid;
}

RawGrid pack(const Occupancy3D& g, const std::optional<VoxelConfig>& cfg) {
  RawGrid raw;
  raw.meta = {GridDType::kU8, {g.nx(), g.ny(), g.nz()}, {"h", "w", "l"}, cfg};
  append_le(raw.payload, g.data());
  return raw;
}

RawGrid pack(const Grid3D<std::uint32_t>& g, const std::optional<VoxelConfig>& cfg) {
  RawGrid raw;
  raw.meta = {GridDType::kU32, {g.nx(), g.ny(), g.nz()}, {"h", "w", "l"}, cfg};
  append_le(raw.payload, g.data());
  return raw;
}

RawGrid pack(const BevOccupancy& g, const std::optional<VoxelConfig>& cfg) {
  RawGrid raw;
  raw.meta = {GridDType::kU8, {g.rows(), g.cols()}, {"h", "w"}, cfg};
  append_le(raw.payload, g.data());
  return raw;
}

RawGrid pack(const InstanceMap& g, const std::optional<VoxelConfig>& cfg) {
  RawGrid raw;
  raw.meta = {GridDType::kU32, {g.rows(), g.cols()}, {"h", "w"}, cfg};
  append_le(raw.payload, g.data());
  return raw;
}

RawGrid pack(const RealGrid2D& g, const std::optional<VoxelConfig>& cfg) {
  RawGrid raw;
  raw.meta = {GridDType::kF32, {g.rows(), g.cols()}, {"h", "w"}, cfg};
  append_le(raw.payload, g.data());
  return raw;
}

RawGrid pack(const HeightMap& g, const std::optional<VoxelConfig>& cfg) {
  RawGrid raw;
  raw.meta = {GridDType::kF32, {2, g.rows(), g.cols()}, {"c", "h", "w"}, cfg};
  append_le(raw.payload, g.values().data());
  std::vector<float> mask(g.mask().data().begin(), g.mask().data().end());
  append_le(raw.payload, mask);
  return raw;
}

RawGrid pack(const FlowField& g, const std::optional<VoxelConfig>& cfg) {
  RawGrid raw;
  raw.meta = {GridDType::kF32, {2, g.rows(), g.cols()}, {"c", "h", "w"}, cfg};
  append_le(raw.payload, g.d_row.data());
  append_le(raw.payload, g.d_col.data());
  return raw;
}

Occupancy3D unpack_occupancy3d(const RawGrid& raw) {
  expect_rank(raw, 3, GridDType::kU8, "u8 volume");
  Occupancy3D g(dim(raw, 0), dim(raw, 1), dim(raw, 2));
  g.data() = read_le<std::uint8_t>(raw.payload);
  return g;
}

Grid3D<std::uint32_t> unpack_instance_volume(const RawGrid& raw) {
  expect_rank(raw, 3, GridDType::kU32, "u32 volume");
  Grid3D<std::uint32_t> g(dim(raw, 0), dim(raw, 1), dim(raw, 2));
  g.data() = read_le<std::uint32_t>(raw.payload);
  return g;
}

BevOccupancy unpack_bev(const RawGrid& raw) {
  expect_rank(raw, 2, GridDType::kU8, "u8 BEV grid");
  BevOccupancy g(dim(raw, 0), dim(raw, 1));
  g.data() = read_le<std::uint8_t>(raw.payload);
  return g;
}

InstanceMap unpack_instance_map(const RawGrid& raw) {
  expect_rank(raw, 2, GridDType::kU32, "u32 BEV grid");
  InstanceMap g(dim(raw, 0), dim(raw, 1));
  g.data() = read_le<std::uint32_t>(raw.payload);
  return g;
}

RealGrid2D unpack_real2d(const RawGrid& raw) {
  expect_rank(raw, 2, GridDType::kF32, "f32 BEV grid");
  RealGrid2D g(dim(raw, 0), dim(raw, 1));
  g.data() = read_le<float>(raw.payload);
  return g;
}

HeightMap unpack_heights(const RawGrid& raw) {
  expect_rank(raw, 3, GridDType::kF32, "f32 two-plane grid");
  if (dim(raw, 0) != 2) throw FormatError("height map grid must have two channels");
  const int rows = dim(raw, 1);
  const int cols = dim(raw, 2);
  const auto values = read_le<float>(raw.payload);
  HeightMap g(rows, cols);
  const std::size_t plane = static_cast<std::size_t>(rows) * cols;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const std::size_t n = static_cast<std::size_t>(i) * cols + j;
      if (values[plane + n] != 0.0f) g.set(i, j, values[n]);
    }
  }
  return g;
}

FlowField unpack_flow(const RawGrid& raw) {
  expect_rank(raw, 3, GridDType::kF32, "f32 two-plane grid");
  if (dim(raw, 0) != 2) throw FormatError("flow grid must have two channels");
  const int rows = dim(raw, 1);
  const int cols = dim(raw, 2);
  const auto values = read_le<float>(raw.payload);
  FlowField g(rows, cols);
  const std::size_t plane = static_cast<std::size_t>(rows) * cols;
  std::copy(values.begin(), values.begin() + plane, g.d_row.data().begin());
  std::copy(values.begin() + plane, values.end(), g.d_col.data().begin());
  return g;
}

std::string sha256_bytes(const unsigned char* data, std::size_t len) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int digest_len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  EVP_DigestUpdate(ctx, data, len);
  EVP_DigestFinal_ex(ctx, digest, &digest_len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * digest_len);
  for (unsigned int n = 0; n < digest_len; ++n) {
    out.push_back(hex[digest[n] >> 4]);
    out.push_back(hex[digest[n] & 0xf]);
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw GridFileError(Kind::kIo, "sha256_file: cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return sha256_bytes(bytes.data(), bytes.size());
}

nlohmann::json to_json(const VoxelConfig& cfg) {
  return {{"x_min", cfg.x_min}, {"x_max", cfg.x_max}, {"y_min", cfg.y_min},
          {"y_max", cfg.y_max}, {"z_min", cfg.z_min}, {"z_max", cfg.z_max},
          {"resolution", cfg.resolution}};
}

nlohmann::json to_json(const Box3D& box) {
  return {{"center", box.center},
          {"size", box.size},
          {"yaw", box.yaw},
          {"instance_id", box.instance_id}};
}

nlohmann::json to_json(const Pose2D& pose) {
  return {{"tx", pose.tx}, {"ty", pose.ty}, {"yaw", pose.yaw}};
}

VoxelConfig voxel_config_from_json(const nlohmann::json& j) {
  VoxelConfig cfg;
  try {
    cfg.x_min = j.at("x_min").get<double>();
    cfg.x_max = j.at("x_max").get<double>();
    cfg.y_min = j.at("y_min").get<double>();
    cfg.y_max = j.at("y_max").get<double>();
    cfg.z_min = j.at("z_min").get<double>();
    cfg.z_max = j.at("z_max").get<double>();
    cfg.resolution = j.at("resolution").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("voxel_config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

Box3D box_from_json(const nlohmann::json& j) {
  Box3D box;
  try {
    box.center = j.at("center").get<std::array<double, 3>>();
    box.size = j.at("size").get<std::array<double, 3>>();
    box.yaw = j.at("yaw").get<double>();
    box.instance_id = j.at("instance_id").get<std::uint32_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("box: ") + e.what());
  }
  box.validate();
  return box;
}

Pose2D pose_from_json(const nlohmann::json& j) {
  Pose2D pose;
  try {
    pose.tx = j.at("tx").get<double>();
    pose.ty = j.at("ty").get<double>();
    pose.yaw = j.at("yaw").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("pose: ") + e.what());
  }
  return pose;
}

nlohmann::json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open JSON file " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void save_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write JSON file " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace occgrid
