#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "acorrect/scene.hpp"

namespace acorrect {

inline constexpr const char* kGeneratorVersion = "acorrect-scenes/1";

/// Parameters for a batch of generated scenes. Instance counts and track spacing are drawn per
/// scene from the given ranges.
struct DatasetSpec {
  ObjectKind kind = ObjectKind::track;
  std::size_t count = 10;
  double noise_ratio = 0.0;
  std::uint64_t seed = 0;
  int width = 128;
  int height = 128;
  int min_instances = 1;
  int max_instances = 4;
  double min_spacing = 10.0;
  double max_spacing = 16.0;
  bool asymmetric_clutter = false;
};

void to_json(nlohmann::json& j, const DatasetSpec& s);
void from_json(const nlohmann::json& j, DatasetSpec& s);

/// Throws UsageError when a field is out of range.
void validate(const DatasetSpec& spec);

/// Scene i is generated from seed mix_seed(spec.seed, i); results do not depend on thread count.
std::vector<Scene> generate_dataset(const DatasetSpec& spec);

struct Dataset {
  nlohmann::json manifest;
  std::vector<Scene> scenes;
};

/**
 * Writes `dir/manifest.json` and, per scene, `dir/scenes/scene_<id>/image.png` and
 * `annotations.json`. Masks are not stored; they are re-rendered from the geometry on load.
 */
void write_dataset(const std::filesystem::path& dir, const DatasetSpec& spec, const std::vector<Scene>& scenes);

/// Throws DataError when the directory or any scene file is missing or malformed.
Dataset load_dataset(const std::filesystem::path& dir);

std::string scene_dir_name(std::size_t index);

}  // namespace acorrect
