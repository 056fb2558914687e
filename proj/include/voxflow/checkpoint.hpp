#pragma once

#include <array>
#include <cstring>
#include <string>
#include <vector>

#include "voxflow/config_json.hpp"
#include "voxflow/scan_io.hpp"
#include "voxflow/segmentor.hpp"

// Checkpoint layout (all integers little-endian):
//   bytes 0..7   magic "VXFCKPT1"
//   u32          length of the config echo (canonical JSON)
//   ...          config echo bytes
//   u64          parameter scalar count
//   f32 * count  parameters in declaration order, row-major per matrix

namespace voxflow {

inline constexpr std::array<char, 8> kCheckpointMagic = {'V', 'X', 'F', 'C', 'K', 'P', 'T', '1'};

inline std::vector<std::uint8_t> checkpoint_bytes(const Segmentor<float>& model) {
  std::vector<std::uint8_t> out;
  for (char c : kCheckpointMagic) out.push_back(std::uint8_t(c));
  const std::string cfg = to_json(model.config()).dump();
  store_le_u32(out, std::uint32_t(cfg.size()));
  out.insert(out.end(), cfg.begin(), cfg.end());
  const std::uint64_t count = std::uint64_t(model.param_count());
  store_le_u32(out, std::uint32_t(count & 0xffffffffu));
  store_le_u32(out, std::uint32_t(count >> 32));
  for (const auto* p : model.params())
    for (Eigen::Index i = 0; i < p->size(); ++i) store_le_f32(out, p->data()[i]);
  return out;
}

inline Segmentor<float> checkpoint_from_bytes(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  auto need = [&](std::size_t n) {
    if (bytes.size() - pos < n) throw IncompatibleCheckpoint("checkpoint truncated");
  };
  need(kCheckpointMagic.size());
  for (char c : kCheckpointMagic)
    if (bytes[pos++] != std::uint8_t(c)) throw IncompatibleCheckpoint("bad checkpoint magic");

  need(4);
  const std::uint32_t cfg_len = load_le_u32(bytes.data() + pos);
  pos += 4;
  need(cfg_len);
  const std::string cfg_text(bytes.begin() + std::ptrdiff_t(pos),
                             bytes.begin() + std::ptrdiff_t(pos + cfg_len));
  pos += cfg_len;

  SegmentorConfig cfg;
  try {
    cfg = segmentor_config_from_json(json::parse(cfg_text));
  } catch (const json::exception& e) {
    throw IncompatibleCheckpoint(std::string("unparsable config echo: ") + e.what());
  }

  need(8);
  const std::uint64_t count =
      std::uint64_t(load_le_u32(bytes.data() + pos)) |
      (std::uint64_t(load_le_u32(bytes.data() + pos + 4)) << 32);
  pos += 8;

  Segmentor<float> model(cfg);
  if (count != std::uint64_t(model.param_count()))
    throw IncompatibleCheckpoint("parameter count does not match the config echo");
  need(count * 4);
  for (auto* p : model.params())
    for (Eigen::Index i = 0; i < p->size(); ++i) {
      p->data()[i] = load_le_f32(bytes.data() + pos);
      pos += 4;
    }
  return model;
}

inline void save_checkpoint(const std::string& path, const Segmentor<float>& model) {
  save_bytes(path, checkpoint_bytes(model));
}

inline Segmentor<float> load_checkpoint(const std::string& path) {
  return checkpoint_from_bytes(load_bytes(path));
}

inline void ensure_compatible(const SegmentorConfig& checkpoint_cfg, const SegmentorConfig& run_cfg) {
  if (!same_architecture(checkpoint_cfg, run_cfg))
    throw IncompatibleCheckpoint("checkpoint architecture does not match the run configuration");
}

}  // namespace voxflow
