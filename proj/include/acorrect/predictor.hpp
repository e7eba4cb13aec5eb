#pragma once

#include <cstddef>
#include <vector>

#include "acorrect/geometry.hpp"
#include "acorrect/oracle.hpp"
#include "acorrect/raster.hpp"

namespace acorrect {

template <typename Scalar>
class ConvNet;
using AlignmentNet = ConvNet<float>;

/// One alignment request: predict the correction for `annotation` given the image and the
/// memory of all other annotations. `instance` is the annotation's index in its scene.
struct AlignmentQuery {
  const Image& image;
  const Mask& memory;
  const Mask& annotation;
  std::size_t instance = 0;
};

/// The alignment function: (image, memory, annotation) -> correcting transform.
class AlignmentPredictor {
 public:
  virtual ~AlignmentPredictor() = default;
  virtual RigidTransform2 predict(const AlignmentQuery& query) const = 0;
};

class IdentityPredictor final : public AlignmentPredictor {
 public:
  RigidTransform2 predict(const AlignmentQuery&) const override { return RigidTransform2::identity(); }
};

/// Runs the trained network. With use_memory = false the memory channel is fed zeros.
class NetPredictor final : public AlignmentPredictor {
 public:
  NetPredictor(const AlignmentNet& net, bool use_memory) : net_(net), use_memory_(use_memory) {}
  RigidTransform2 predict(const AlignmentQuery& query) const override;

 private:
  const AlignmentNet& net_;
  bool use_memory_;
};

/// Grid-searches against the scene's ground-truth masks (indexed by instance).
class GroundTruthPredictor final : public AlignmentPredictor {
 public:
  GroundTruthPredictor(std::vector<Mask> gt_masks, OracleGrid grid = {})
      : gt_masks_(std::move(gt_masks)), grid_(grid) {}
  RigidTransform2 predict(const AlignmentQuery& query) const override;

 private:
  std::vector<Mask> gt_masks_;
  GroundTruthOracle oracle_;
  OracleGrid grid_;
};

/// Grid-searches the image alone, matching each instance's rendered appearance.
class ImageOraclePredictor final : public AlignmentPredictor {
 public:
  ImageOraclePredictor(std::vector<Rgb> appearances, OracleGrid grid = {})
      : appearances_(std::move(appearances)), grid_(grid) {}
  RigidTransform2 predict(const AlignmentQuery& query) const override;

 private:
  std::vector<Rgb> appearances_;
  OracleGrid grid_;
};

}  // namespace acorrect
