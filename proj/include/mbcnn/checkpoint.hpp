#pragma once

#include <cstdint>
#include <string>

#include "mbcnn/model.hpp"

namespace mbcnn {

// Binary model snapshot. Layout, all integers little-endian:
//   "MBCK" | u32 version | u32 json_len | arch json |
//   u32 tensor_count | per tensor (sorted by name):
//     u32 name_len | name | u32 rank(=4) | 4 x u32 dims | f32 data row-major
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Model& m, const std::string& path);
Model load_checkpoint(const std::string& path);

std::uint64_t fnv1a64(const void* data, std::size_t n);
std::uint64_t tensor_hash(const Tensor& t);

}  // namespace mbcnn
