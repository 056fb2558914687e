#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "voxflow/point_cloud.hpp"

// Binary scan and label codecs. A scan is a sequence of little-endian
// IEEE-754 32-bit floats with 16-byte stride in the order x, y, z, intensity.
// A label file is a sequence of little-endian 32-bit words; the semantic id
// lives in the low 16 bits and the instance id in the high 16 bits.

namespace voxflow {

inline std::uint32_t load_le_u32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}

inline float load_le_f32(const std::uint8_t* p) {
  return std::bit_cast<float>(load_le_u32(p));
}

inline void store_le_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(std::uint8_t(v & 0xff));
  out.push_back(std::uint8_t((v >> 8) & 0xff));
  out.push_back(std::uint8_t((v >> 16) & 0xff));
  out.push_back(std::uint8_t((v >> 24) & 0xff));
}

inline void store_le_f32(std::vector<std::uint8_t>& out, float v) {
  store_le_u32(out, std::bit_cast<std::uint32_t>(v));
}

inline PointCloud read_scan(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() % 16 != 0)
    throw MalformedScan("scan byte length " + std::to_string(bytes.size()) +
                        " is not divisible by 16");
  PointCloud cloud;
  const std::size_t n = bytes.size() / 16;
  cloud.positions.reserve(n);
  cloud.intensity.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* rec = bytes.data() + i * 16;
    const float x = load_le_f32(rec);
    const float y = load_le_f32(rec + 4);
    const float z = load_le_f32(rec + 8);
    const float inten = load_le_f32(rec + 12);
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z) || !std::isfinite(inten))
      throw InvalidInput("non-finite value in scan record " + std::to_string(i));
    cloud.positions.emplace_back(x, y, z);
    cloud.intensity.push_back(inten);
  }
  return cloud;
}

inline std::vector<std::uint8_t> write_scan(const PointCloud& cloud) {
  cloud.validate();
  std::vector<std::uint8_t> out;
  out.reserve(cloud.size() * 16);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    store_le_f32(out, float(cloud.positions[i].x()));
    store_le_f32(out, float(cloud.positions[i].y()));
    store_le_f32(out, float(cloud.positions[i].z()));
    store_le_f32(out, float(cloud.intensity[i]));
  }
  return out;
}

struct LabelArrays {
  std::vector<std::uint32_t> semantic;
  std::vector<std::uint32_t> instance;
};

inline LabelArrays read_labels(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() % 4 != 0)
    throw MalformedLabel("label byte length " + std::to_string(bytes.size()) +
                         " is not divisible by 4");
  LabelArrays out;
  const std::size_t n = bytes.size() / 4;
  out.semantic.reserve(n);
  out.instance.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t word = load_le_u32(bytes.data() + i * 4);
    out.semantic.push_back(word & 0xffffu);
    out.instance.push_back(word >> 16);
  }
  return out;
}

inline std::vector<std::uint8_t> write_labels(const std::vector<std::uint32_t>& semantic,
                                              const std::vector<std::uint32_t>& instance) {
  if (semantic.size() != instance.size())
    throw InvalidInput("semantic and instance arrays differ in length");
  std::vector<std::uint8_t> out;
  out.reserve(semantic.size() * 4);
  for (std::size_t i = 0; i < semantic.size(); ++i) {
    if (semantic[i] > 0xffffu || instance[i] > 0xffffu)
      throw InvalidInput("label value exceeds 16 bits at index " + std::to_string(i));
    store_le_u32(out, semantic[i] | (instance[i] << 16));
  }
  return out;
}

inline std::vector<std::uint8_t> load_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

inline void save_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write file: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw Error("short write to file: " + path);
}

}  // namespace voxflow
