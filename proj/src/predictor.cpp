#include "acorrect/predictor.hpp"

#include <stdexcept>

#include "acorrect/network.hpp"

namespace acorrect {

RigidTransform2 NetPredictor::predict(const AlignmentQuery& q) const {
  const auto& arch = net_.architecture();
  if (q.image.width() != arch.width || q.image.height() != arch.height)
    throw std::invalid_argument("image size does not match the network architecture");
  return to_transform(net_.forward(make_input<float>(q.image, q.annotation, use_memory_ ? &q.memory : nullptr)));
}

RigidTransform2 GroundTruthPredictor::predict(const AlignmentQuery& q) const {
  if (q.instance >= gt_masks_.size()) throw std::out_of_range("GroundTruthPredictor: unknown instance");
  return oracle_.align(gt_masks_[q.instance], q.annotation, grid_);
}

RigidTransform2 ImageOraclePredictor::predict(const AlignmentQuery& q) const {
  if (q.instance >= appearances_.size()) throw std::out_of_range("ImageOraclePredictor: unknown instance");
  return ImageOracle(appearances_[q.instance]).align(q.image, q.annotation, grid_);
}

}  // namespace acorrect
