#pragma once

#include <cstdint>
#include <filesystem>

#include "nsfm/velocity_net.hpp"

namespace nsfm {

struct CheckpointMeta {
  std::uint64_t dataset_hash = 0;
  std::uint64_t seed = 0;
};

struct Checkpoint {
  VelocityNet net;
  CheckpointMeta meta;
};

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

// Little-endian "NSCK" v1: u32 version, u32 layer_count, (u32 in, u32 out)
// per layer, u32 time_embed_dim, f32 parameters in flat order, u64 dataset
// hash, u64 seed.
void save_checkpoint(const VelocityNet& net, const CheckpointMeta& meta,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace nsfm
