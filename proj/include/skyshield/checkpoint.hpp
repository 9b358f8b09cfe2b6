#pragma once

#include <filesystem>

#include "skyshield/lunet.hpp"

namespace skyshield {

// Checkpoint layout (little-endian):
//   magic "LUNW", version u16 = 1,
//   config: in_channels u16, base_channels u16, depth u16, kernel_size u16,
//           seed u64,
//   then one tensor per layer_plan entry, weights before bias, each as
//   dim_count u32, dims u32[dim_count], float32 data. Weight tensors are
//   (out, in, ky, kx); biases are (out).
inline constexpr char kCheckpointMagic[4] = {'L', 'U', 'N', 'W'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

void save_checkpoint(const LUnetModel<float>& model, const std::filesystem::path& path);
LUnetModel<float> load_checkpoint(const std::filesystem::path& path);

}  // namespace skyshield
