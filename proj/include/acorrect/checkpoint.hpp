#pragma once

#include <filesystem>

#include "acorrect/network.hpp"

namespace acorrect {

/**
 * `.acpt` checkpoint: one line of JSON header terminated by '\n', then the parameters as
 * little-endian IEEE-754 float32 in layout order.
 *
 * Header keys: format, architecture, parameter_count, training_config, seed.
 */
struct Checkpoint {
  AlignmentNet net;
  nlohmann::json training_config = nlohmann::json::object();
  std::uint64_t seed = 0;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);

/// Throws DataError on unreadable files, malformed headers, or a parameter count that does not
/// match the declared architecture.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace acorrect
