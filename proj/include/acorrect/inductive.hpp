#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "acorrect/geometry.hpp"
#include "acorrect/predictor.hpp"
#include "acorrect/raster.hpp"

namespace acorrect {

/**
 * Processing order of annotations: left to right, then bottom to top. Centroid x ascending;
 * candidates whose x lies within 1px of the leftmost remaining centroid go bottom first
 * (greater y, since +y points down); remaining ties by original index.
 *
 * Throws std::invalid_argument on an empty list.
 */
std::vector<std::size_t> canonical_order(std::span<const Point2> centroids);
std::vector<std::size_t> canonical_order(std::span<const Mask> annotations);

/**
 * Sequential correction state. Before step i (1-based) the memory holds
 *
 *   M_{i-1} = sum_{j < i} warp(y_j, t_j) + sum_{j > i} y_j
 *
 * and each step updates it as M_i = M_{i-1} + warp(y_i, t_i) - y_{i+1}, where the subtracted
 * term is absent at the final step. Values are never clamped.
 */
class CorrectionSession {
 public:
  const Image& image() const { return image_; }
  /// Annotations in processing order.
  const std::vector<Mask>& annotations() const { return annotations_; }
  const std::vector<std::size_t>& original_indices() const { return original_; }
  const Mask& memory() const { return memory_; }
  /// Index of the next annotation to correct, 1-based; size() + 1 once finished.
  std::size_t step_index() const { return step_; }
  std::size_t size() const { return annotations_.size(); }
  bool finished() const { return step_ > annotations_.size(); }
  const std::vector<RigidTransform2>& corrections() const { return corrections_; }

  /// Memory recomputed from scratch for the current step, summing in processing order.
  Mask expanded_memory() const;

 private:
  friend CorrectionSession init_session(Image image, std::vector<Mask> annotations,
                                        std::vector<std::size_t> original_indices);
  friend RigidTransform2 step(CorrectionSession& session, const AlignmentPredictor& predictor);

  Image image_;
  std::vector<Mask> annotations_;
  std::vector<std::size_t> original_;
  Mask memory_;
  std::size_t step_ = 1;
  std::vector<RigidTransform2> corrections_;
};

/**
 * Starts a session over annotations already in processing order; M_0 = y_2 + ... + y_n.
 * `original_indices` maps processing position to scene index (identity when empty).
 */
CorrectionSession init_session(Image image, std::vector<Mask> annotations,
                               std::vector<std::size_t> original_indices = {});

/// Orders `annotations` canonically, then starts a session over them.
CorrectionSession start_session(Image image, const std::vector<Mask>& annotations);

/// Predicts t_i for the current annotation, updates the memory and advances.
/// Throws std::logic_error when the session is finished.
RigidTransform2 step(CorrectionSession& session, const AlignmentPredictor& predictor);

struct CorrectionRecord {
  std::size_t original_index;
  RigidTransform2 transform;
  Mask corrected;
};

/// Steps until finished; records in processing order, tagged with scene indices.
std::vector<CorrectionRecord> run_to_completion(CorrectionSession& session, const AlignmentPredictor& predictor);

}  // namespace acorrect
