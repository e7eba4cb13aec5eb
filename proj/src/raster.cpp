#include "acorrect/raster.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace acorrect {

namespace {

struct PixelIndex {
  int col;
  int row;
};

inline PixelIndex pixel_of(const Point2& p, int width, int height) {
  return {static_cast<int>(std::floor(p.x + 0.5 * width)), static_cast<int>(std::floor(p.y + 0.5 * height))};
}

double point_segment_distance_sq(const Point2& p, const Point2& a, const Point2& b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len_sq = dx * dx + dy * dy;
  double u = 0.0;
  if (len_sq > 0.0) u = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len_sq, 0.0, 1.0);
  const double ex = a.x + u * dx - p.x, ey = a.y + u * dy - p.y;
  return ex * ex + ey * ey;
}

void check_dims(int width, int height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("raster dimensions must be positive");
}

}  // namespace

Mask::Mask(int width, int height) : width_(width), height_(height) {
  check_dims(width, height);
  data_.assign(static_cast<std::size_t>(width) * height, 0.0f);
}

Mask::Mask(int width, int height, std::vector<float> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height);
  if (data_.size() != static_cast<std::size_t>(width) * height)
    throw std::invalid_argument("mask data length does not match dimensions");
}

std::size_t Mask::lit_count() const {
  return static_cast<std::size_t>(std::count_if(data_.begin(), data_.end(), [](float v) { return v >= kLitThreshold; }));
}

Point2 Mask::centroid() const {
  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (int r = 0; r < height_; ++r)
    for (int c = 0; c < width_; ++c)
      if (at(c, r) >= kLitThreshold) {
        sx += c;
        sy += r;
        ++n;
      }
  if (n == 0) return {};
  return {sx / n + 0.5 - 0.5 * width_, sy / n + 0.5 - 0.5 * height_};
}

Mask& Mask::operator+=(const Mask& o) {
  if (!same_shape(o)) throw std::invalid_argument("mask dimension mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Mask& Mask::operator-=(const Mask& o) {
  if (!same_shape(o)) throw std::invalid_argument("mask dimension mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Mask operator+(Mask a, const Mask& b) { return a += b; }
Mask operator-(Mask a, const Mask& b) { return a -= b; }

Image::Image(int width, int height) : width_(width), height_(height) {
  check_dims(width, height);
  data_.assign(static_cast<std::size_t>(kChannels) * width * height, 0.0f);
}

Point2 pixel_center(int col, int row, int width, int height) {
  return {col + 0.5 - 0.5 * width, row + 0.5 - 0.5 * height};
}

Mask warp(const Mask& mask, const RigidTransform2& t) {
  const int w = mask.width(), h = mask.height();
  check_dims(w, h);
  const RigidTransform2 inv = inverse(t);
  Mask out(w, h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const PixelIndex src = pixel_of(apply(inv, pixel_center(c, r, w, h)), w, h);
      if (src.col >= 0 && src.col < w && src.row >= 0 && src.row < h) out.at(c, r) = mask.at(src.col, src.row);
    }
  return out;
}

Image warp(const Image& image, const RigidTransform2& t) {
  const int w = image.width(), h = image.height();
  check_dims(w, h);
  const RigidTransform2 inv = inverse(t);
  Image out(w, h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const PixelIndex src = pixel_of(apply(inv, pixel_center(c, r, w, h)), w, h);
      if (src.col >= 0 && src.col < w && src.row >= 0 && src.row < h) out.set(c, r, image.get(src.col, src.row));
    }
  return out;
}

double iou(const Mask& a, const Mask& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("iou: dimension mismatch");
  std::size_t inter = 0, uni = 0;
  const auto da = a.data(), db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    const bool la = da[i] >= kLitThreshold, lb = db[i] >= kLitThreshold;
    inter += (la && lb);
    uni += (la || lb);
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

WarpProbe::WarpProbe(const Mask& source) : source_(source) {
  const int w = source.width(), h = source.height();
  min_col_ = w;
  min_row_ = h;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      if (source.at(c, r) >= kLitThreshold) {
        any_lit_ = true;
        min_col_ = std::min(min_col_, c);
        max_col_ = std::max(max_col_, c);
        min_row_ = std::min(min_row_, r);
        max_row_ = std::max(max_row_, r);
      }
}

void WarpProbe::lit_pixels(const RigidTransform2& t, std::vector<int>& out) const {
  out.clear();
  if (!any_lit_) return;
  const int w = source_.width(), h = source_.height();
  const double hw = 0.5 * w, hh = 0.5 * h;
  const Point2 corners[4] = {{min_col_ - hw, min_row_ - hh},
                             {max_col_ + 1 - hw, min_row_ - hh},
                             {min_col_ - hw, max_row_ + 1 - hh},
                             {max_col_ + 1 - hw, max_row_ + 1 - hh}};
  double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
  for (const auto& corner : corners) {
    const Point2 q = apply(t, corner);
    lo_x = std::min(lo_x, q.x);
    hi_x = std::max(hi_x, q.x);
    lo_y = std::min(lo_y, q.y);
    hi_y = std::max(hi_y, q.y);
  }
  const int c0 = std::max(0, static_cast<int>(std::floor(lo_x + hw)) - 1);
  const int c1 = std::min(w - 1, static_cast<int>(std::ceil(hi_x + hw)) + 1);
  const int r0 = std::max(0, static_cast<int>(std::floor(lo_y + hh)) - 1);
  const int r1 = std::min(h - 1, static_cast<int>(std::ceil(hi_y + hh)) + 1);
  const RigidTransform2 inv = inverse(t);
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) {
      const PixelIndex src = pixel_of(apply(inv, pixel_center(c, r, w, h)), w, h);
      if (src.col >= min_col_ && src.col <= max_col_ && src.row >= min_row_ && src.row <= max_row_ &&
          source_.at(src.col, src.row) >= kLitThreshold)
        out.push_back(r * w + c);
    }
}

double WarpProbe::iou_with(const RigidTransform2& t, const Mask& target, std::size_t target_lit) const {
  if (!source_.same_shape(target)) throw std::invalid_argument("iou: dimension mismatch");
  thread_local std::vector<int> lit;
  lit_pixels(t, lit);
  const auto td = target.data();
  std::size_t inter = 0;
  for (int idx : lit) inter += td[static_cast<std::size_t>(idx)] >= kLitThreshold;
  const std::size_t uni = lit.size() + target_lit - inter;
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

Mask rasterize_polyline(std::span<const Point2> points, double thickness, int width, int height) {
  if (points.size() < 2) throw std::invalid_argument("rasterize_polyline: need at least 2 points");
  if (!(thickness >= 1.0)) throw std::invalid_argument("rasterize_polyline: thickness must be >= 1");
  Mask out(width, height);
  const double r = 0.5 * thickness, r_sq = r * r;
  for (std::size_t s = 0; s + 1 < points.size(); ++s) {
    const Point2 a = points[s], b = points[s + 1];
    const int c0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - r + 0.5 * width)) - 1);
    const int c1 = std::min(width - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + r + 0.5 * width)) + 1);
    const int r0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - r + 0.5 * height)) - 1);
    const int r1 = std::min(height - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + r + 0.5 * height)) + 1);
    for (int row = r0; row <= r1; ++row)
      for (int col = c0; col <= c1; ++col)
        if (point_segment_distance_sq(pixel_center(col, row, width, height), a, b) <= r_sq) out.at(col, row) = 1.0f;
  }
  return out;
}

double polygon_area(std::span<const Point2> points) {
  double acc = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Point2& p = points[i];
    const Point2& q = points[(i + 1) % points.size()];
    acc += p.x * q.y - q.x * p.y;
  }
  return 0.5 * std::abs(acc);
}

Mask rasterize_polygon(std::span<const Point2> points, int width, int height) {
  if (points.size() < 3) throw std::invalid_argument("rasterize_polygon: need at least 3 points");
  if (polygon_area(points) < 1e-9) throw std::invalid_argument("rasterize_polygon: degenerate polygon");
  Mask out(width, height);
  const std::size_t n = points.size();
  for (int row = 0; row < height; ++row)
    for (int col = 0; col < width; ++col) {
      const Point2 p = pixel_center(col, row, width, height);
      bool inside = false;
      bool on_edge = false;
      for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point2& a = points[i];
        const Point2& b = points[j];
        if (point_segment_distance_sq(p, a, b) <= 1e-18) {
          on_edge = true;
          break;
        }
        if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) inside = !inside;
      }
      if (inside || on_edge) out.at(col, row) = 1.0f;
    }
  return out;
}

}  // namespace acorrect
