#pragma once

#include <cstdint>
#include <string>

#include "weathergs/scene.hpp"

namespace wgs {

/// Checkpoint format (little endian):
///   magic "WGS1" | u32 version (=1) | u64 config_hash | u64 count |
///   count * 14 doubles (position 3, rotation wxyz 4, log_scales 3,
///   opacity_logit 1, color 3)
/// Round trip is bit exact.
void save_checkpoint(const std::string& path, const GaussianCloud& cloud,
                     uint64_t config_hash = 0);

struct CheckpointData {
    GaussianCloud cloud;
    uint64_t config_hash = 0;
};

CheckpointData load_checkpoint(const std::string& path);

}  // namespace wgs
