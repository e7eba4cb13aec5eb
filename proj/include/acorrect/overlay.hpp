#pragma once

#include <vector>

#include "acorrect/raster.hpp"

namespace acorrect {

/// Outline colors: noisy labels red, ground truth green, predictions yellow.
struct OverlaySpec {
  Rgb noisy{1.0f, 0.0f, 0.0f};
  Rgb ground_truth{0.0f, 1.0f, 0.0f};
  Rgb predicted{1.0f, 1.0f, 0.0f};
};

/// Lit pixels with at least one unlit (or out-of-frame) 4-neighbor.
Mask outline(const Mask& mask);

/// Draws 1px outlines over a copy of `image`: ground truth first, then noisy, then predicted.
Image render_overlay(const Image& image, const std::vector<Mask>& ground_truth, const std::vector<Mask>& noisy,
                     const std::vector<Mask>& predicted, const OverlaySpec& spec = {});

}  // namespace acorrect
