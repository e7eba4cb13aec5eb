#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "acorrect/geometry.hpp"

namespace acorrect {

/// Values at or above this level count as "lit" wherever a binary reading is needed.
inline constexpr float kLitThreshold = 0.5f;

/**
 * Single-channel raster of non-negative reals, row-major. Holds binary annotation masks and
 * real-valued memory maps.
 *
 * Pixel (col, row) has its center at frame point (col + 0.5 - W/2, row + 0.5 - H/2).
 */
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height);
  Mask(int width, int height, std::vector<float> data);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float& at(int col, int row) { return data_[static_cast<std::size_t>(row) * width_ + col]; }
  float at(int col, int row) const { return data_[static_cast<std::size_t>(row) * width_ + col]; }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  bool same_shape(const Mask& o) const { return width_ == o.width_ && height_ == o.height_; }

  /// Number of pixels at or above kLitThreshold.
  std::size_t lit_count() const;
  /// Centroid of lit pixels in frame coordinates; the origin when nothing is lit.
  Point2 centroid() const;

  Mask& operator+=(const Mask& o);
  Mask& operator-=(const Mask& o);

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

Mask operator+(Mask a, const Mask& b);
Mask operator-(Mask a, const Mask& b);

using Rgb = std::array<float, 3>;

/// Three-channel image, planar storage (channel, row, col), values in [0, 1].
class Image {
 public:
  static constexpr int kChannels = 3;

  Image() = default;
  Image(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }

  float& at(int channel, int col, int row) {
    return data_[(static_cast<std::size_t>(channel) * height_ + row) * width_ + col];
  }
  float at(int channel, int col, int row) const {
    return data_[(static_cast<std::size_t>(channel) * height_ + row) * width_ + col];
  }
  void set(int col, int row, const Rgb& c) {
    for (int k = 0; k < kChannels; ++k) at(k, col, row) = c[k];
  }
  Rgb get(int col, int row) const { return {at(0, col, row), at(1, col, row), at(2, col, row)}; }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  /// One channel as a contiguous row-major plane.
  std::span<const float> plane(int channel) const {
    return std::span<const float>(data_).subspan(static_cast<std::size_t>(channel) * width_ * height_,
                                                 static_cast<std::size_t>(width_) * height_);
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

Point2 pixel_center(int col, int row, int width, int height);

/// Nearest-neighbor resampling: output(p) = input(apply(inverse(t), p)), zero outside the frame.
Mask warp(const Mask& mask, const RigidTransform2& t);
Image warp(const Image& image, const RigidTransform2& t);

/// Intersection over union after thresholding at kLitThreshold; 1 when both are empty.
double iou(const Mask& a, const Mask& b);

/**
 * Precomputed source for repeated "warp then compare" queries. Only the bounding box of the
 * source's lit pixels is visited, so each query costs O(object area) rather than O(W*H).
 */
class WarpProbe {
 public:
  explicit WarpProbe(const Mask& source);

  /// Row-major indices of pixels lit in warp(source, t), in increasing order.
  void lit_pixels(const RigidTransform2& t, std::vector<int>& out) const;

  /// Equals iou(warp(source, t), target) without materializing the warp.
  double iou_with(const RigidTransform2& t, const Mask& target, std::size_t target_lit) const;

  const Mask& source() const { return source_; }

 private:
  Mask source_;
  bool any_lit_ = false;
  int min_col_ = 0, max_col_ = -1, min_row_ = 0, max_row_ = -1;
};

/// Lights every pixel whose center lies within thickness/2 of a segment of the polyline.
Mask rasterize_polyline(std::span<const Point2> points, double thickness, int width, int height);

/// Even-odd fill of a simple polygon by pixel center; centers on the boundary count as inside.
Mask rasterize_polygon(std::span<const Point2> points, int width, int height);

double polygon_area(std::span<const Point2> points);

// PNG interchange. Masks are 8-bit gray with min(v, 1) * 255; images are 8-bit RGB.
void write_png(const std::filesystem::path& path, const Mask& mask);
void write_png(const std::filesystem::path& path, const Image& image);
Mask read_mask_png(const std::filesystem::path& path);
Image read_image_png(const std::filesystem::path& path);

}  // namespace acorrect
