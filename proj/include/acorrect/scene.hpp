#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "acorrect/geometry.hpp"
#include "acorrect/raster.hpp"
#include "acorrect/rng.hpp"

namespace acorrect {

enum class ObjectKind { track, building };

std::string to_string(ObjectKind kind);
ObjectKind parse_object_kind(const std::string& s);

/// Noise bounds used throughout: up to 25px translation per axis and 5 degrees of rotation.
struct PerturbationBounds {
  double max_translation = 25.0;
  double max_rotation_deg = 5.0;
};

/**
 * Samples g = T(tx, ty) * rotation_about(center, theta) with tx, ty uniform in
 * [-max_translation, max_translation] and theta uniform in +-max_rotation_deg (converted to radians).
 */
RigidTransform2 sample_perturbation(Rng& rng, double max_translation = 25.0, double max_rotation_deg = 5.0,
                                    const Point2& center = {});
RigidTransform2 sample_perturbation(Rng& rng, const PerturbationBounds& bounds, const Point2& center);

/// Displacement of `center` under g and the rotation angle; the sampled parameters of g.
struct PerturbationParameters {
  double dx;
  double dy;
  double theta;
};
PerturbationParameters perturbation_parameters(const RigidTransform2& g, const Point2& center);

struct ObjectAnnotation {
  ObjectKind kind = ObjectKind::track;
  /// Noise-free geometry in frame coordinates: centerline for tracks, footprint for buildings.
  std::vector<Point2> geometry;
  Mask gt_mask;
  /// warp(gt_mask, gt_perturbation); regenerated from the other fields, never stored on its own.
  Mask noisy_mask;
  RigidTransform2 gt_perturbation;
  bool is_noisy = false;
  /// Rendered color of the object, used by the appearance-based oracle.
  Rgb appearance{};
};

struct SceneParams {
  ObjectKind kind = ObjectKind::track;
  int width = 128;
  int height = 128;
  int count = 1;
  double spacing = 14.0;
  double noise_ratio = 0.0;
  PerturbationBounds bounds;
  double track_width = 9.0;
  double annotation_thickness = 9.0;
  double max_tilt_deg = 15.0;
  /// Pixels kept free at every frame edge. Must be at least 26.
  int margin = 30;
  bool asymmetric_clutter = false;
};

struct Scene {
  Image image;
  std::vector<ObjectAnnotation> annotations;
  std::uint64_t seed = 0;
  SceneParams meta;
};

Scene generate_track_scene(std::uint64_t seed, const SceneParams& params);
Scene generate_building_scene(std::uint64_t seed, const SceneParams& params);
Scene generate_scene(std::uint64_t seed, const SceneParams& params);

enum class SymmetryAxis { vertical, horizontal };

/// A single straight track on the chosen image centerline whose image is pixel-identical under
/// scene_symmetry(). The annotation carries a sampled perturbation.
Scene make_symmetric_track_scene(std::uint64_t seed, SymmetryAxis axis);

/// Rotation by pi about the image center; the symmetry of make_symmetric_track_scene scenes.
RigidTransform2 scene_symmetry();

/// Rasterizes an annotation's geometry using the scene parameters.
Mask render_annotation(const std::vector<Point2>& geometry, ObjectKind kind, const SceneParams& params);

/// Re-derives noisy labels from ground truth with a fresh per-instance Bernoulli(noise_ratio) draw.
void resample_label_noise(Scene& scene, double noise_ratio, std::uint64_t seed);

/// Sets an annotation's perturbation and regenerates its noisy mask.
void set_perturbation(ObjectAnnotation& annotation, const RigidTransform2& g);

void to_json(nlohmann::json& j, const SceneParams& p);
void from_json(const nlohmann::json& j, SceneParams& p);

}  // namespace acorrect
