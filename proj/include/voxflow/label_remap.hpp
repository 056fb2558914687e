#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "voxflow/point_cloud.hpp"

namespace voxflow {

// Maps raw dataset class ids (< 2^16) onto a contiguous evaluation class set
// 0..num_classes-1 plus kIgnoreLabel.
struct LabelRemap {
  std::unordered_map<std::uint32_t, std::uint32_t> table;
  std::uint32_t num_classes = 0;

  void validate() const {
    for (const auto& [raw, eval] : table) {
      if (raw > 0xffffu) throw InvalidInput("raw class id exceeds 16 bits");
      if (eval != kIgnoreLabel && eval >= num_classes)
        throw InvalidInput("evaluation class id out of range");
    }
  }
};

inline std::vector<std::uint32_t> remap(const std::vector<std::uint32_t>& labels,
                                        const LabelRemap& rm) {
  std::vector<std::uint32_t> out;
  out.reserve(labels.size());
  for (std::uint32_t raw : labels) {
    auto it = rm.table.find(raw);
    if (it == rm.table.end()) throw UnknownClass(raw);
    out.push_back(it->second);
  }
  return out;
}

}  // namespace voxflow
