#pragma once

#include <cstdint>
#include <filesystem>

#include "audionav/model.hpp"

namespace audionav::rl {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary blob: magic "ANCK", format version, scalar width, network sizes,
/// then every tensor as (name, rows, cols, column-major float32 data).
void save_checkpoint(const std::filesystem::path& path, const ModelParams<float>& params);

/// Throws DomainError for a missing or malformed file, a version other than
/// kCheckpointVersion, or tensors that do not match the stored sizes.
ModelParams<float> load_checkpoint(const std::filesystem::path& path);

} // namespace audionav::rl
