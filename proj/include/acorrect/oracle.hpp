#pragma once

#include <functional>

#include "acorrect/geometry.hpp"
#include "acorrect/raster.hpp"

namespace acorrect {

/**
 * Search grid for the brute-force aligners. Candidates are T(dx, dy) * rotation_about(c, phi)
 * with c the centroid of the annotation being aligned, dx, dy on multiples of translation_step
 * within +-translation_range and phi on multiples of rotation_step_deg within +-rotation_range_deg.
 *
 * Coarse-to-fine search first scores every coarse_factor-th grid point, then refines the best
 * `candidates` of them over the full-resolution neighborhood.
 */
struct OracleGrid {
  double translation_range = 25.0;
  double translation_step = 1.0;
  double rotation_range_deg = 5.0;
  double rotation_step_deg = 0.5;
  bool coarse_to_fine = true;
  int coarse_translation_factor = 3;
  int coarse_rotation_factor = 5;
  int candidates = 8;
};

/// Grid parameters of a transform: displacement of `center` and rotation angle (radians).
struct GridParameters {
  double dx;
  double dy;
  double phi;
};

RigidTransform2 grid_transform(const Point2& center, double dx, double dy, double phi);
GridParameters grid_parameters(const RigidTransform2& t, const Point2& center);

/// Higher is better. Must be deterministic.
using AlignmentScore = std::function<double(const RigidTransform2&)>;

/**
 * Argmax of `score` over the grid built around `annotation`'s centroid. Ties go to the smallest
 * transform_distance_sq to identity (scale = W/2), then lexicographic (tx, ty, theta).
 * Throws std::invalid_argument for an empty grid.
 */
RigidTransform2 oracle_align(const AlignmentScore& score, const Mask& annotation, const OracleGrid& grid);

/// Scores a candidate by iou(warp(y_noisy, t), y_gt).
class GroundTruthOracle {
 public:
  RigidTransform2 align(const Mask& gt, const Mask& noisy, const OracleGrid& grid = {}) const;
};

/// Scores a candidate by normalized cross-correlation between warp(y, t) and a per-pixel
/// likelihood that the image shows an object of the given appearance.
class ImageOracle {
 public:
  explicit ImageOracle(Rgb appearance, double sigma = 0.08) : appearance_(appearance), sigma_(sigma) {}

  Mask likelihood(const Image& image) const;
  RigidTransform2 align(const Image& image, const Mask& annotation, const OracleGrid& grid = {}) const;

 private:
  Rgb appearance_;
  double sigma_;
};

}  // namespace acorrect
