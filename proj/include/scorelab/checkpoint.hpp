#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "scorelab/tensor.hpp"

namespace scorelab::cli {

// Binary model snapshot. Layout (all integers little-endian):
//   magic "SCRP" | u32 version | u64 tensor count |
//   per tensor: u32 name length, name bytes (UTF-8), u32 rank,
//               u64 dims..., f64 values... |
//   u64 config length, config text bytes
// Unknown magic or version is rejected before anything is returned.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::vector<std::pair<std::string, numcore::Tensor>> tensors;
  std::string config_text;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace scorelab::cli
