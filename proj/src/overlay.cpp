#include "acorrect/overlay.hpp"

namespace acorrect {

Mask outline(const Mask& mask) {
  const int w = mask.width(), h = mask.height();
  Mask out(w, h);
  auto lit = [&](int c, int r) { return c >= 0 && r >= 0 && c < w && r < h && mask.at(c, r) >= kLitThreshold; };
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      if (lit(c, r) && !(lit(c - 1, r) && lit(c + 1, r) && lit(c, r - 1) && lit(c, r + 1))) out.at(c, r) = 1.0f;
  return out;
}

Image render_overlay(const Image& image, const std::vector<Mask>& ground_truth, const std::vector<Mask>& noisy,
                     const std::vector<Mask>& predicted, const OverlaySpec& spec) {
  Image out = image;
  auto draw = [&](const std::vector<Mask>& masks, const Rgb& color) {
    for (const auto& m : masks) {
      const Mask edge = outline(m);
      for (int r = 0; r < edge.height(); ++r)
        for (int c = 0; c < edge.width(); ++c)
          if (edge.at(c, r) >= kLitThreshold) out.set(c, r, color);
    }
  };
  draw(ground_truth, spec.ground_truth);
  draw(noisy, spec.noisy);
  draw(predicted, spec.predicted);
  return out;
}

}  // namespace acorrect
