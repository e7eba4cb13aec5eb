#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "acorrect/raster.hpp"

namespace acorrect {

namespace {

std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

void write_raw(const std::filesystem::path& path, int width, int height, png_uint_32 format,
               const std::vector<std::uint8_t>& bytes) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(width);
  img.height = static_cast<png_uint_32>(height);
  img.format = format;
  if (!png_image_write_to_file(&img, path.string().c_str(), 0, bytes.data(), 0, nullptr))
    throw std::runtime_error("failed to write PNG " + path.string() + ": " + img.message);
}

std::vector<std::uint8_t> read_raw(const std::filesystem::path& path, png_uint_32 format, int& width, int& height) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str()))
    throw std::runtime_error("failed to read PNG " + path.string() + ": " + img.message);
  img.format = format;
  std::vector<std::uint8_t> bytes(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, bytes.data(), 0, nullptr)) {
    png_image_free(&img);
    throw std::runtime_error("failed to decode PNG " + path.string() + ": " + img.message);
  }
  width = static_cast<int>(img.width);
  height = static_cast<int>(img.height);
  return bytes;
}

}  // namespace

void write_png(const std::filesystem::path& path, const Mask& mask) {
  std::vector<std::uint8_t> bytes(mask.size());
  std::ranges::transform(mask.data(), bytes.begin(), [](float v) { return to_byte(std::min(v, 1.0f)); });
  write_raw(path, mask.width(), mask.height(), PNG_FORMAT_GRAY, bytes);
}

void write_png(const std::filesystem::path& path, const Image& image) {
  const int w = image.width(), h = image.height();
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(3) * w * h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      for (int k = 0; k < 3; ++k) bytes[(static_cast<std::size_t>(r) * w + c) * 3 + k] = to_byte(image.at(k, c, r));
  write_raw(path, w, h, PNG_FORMAT_RGB, bytes);
}

Mask read_mask_png(const std::filesystem::path& path) {
  int w = 0, h = 0;
  const auto bytes = read_raw(path, PNG_FORMAT_GRAY, w, h);
  std::vector<float> data(bytes.size());
  std::ranges::transform(bytes, data.begin(), [](std::uint8_t b) { return b / 255.0f; });
  return Mask(w, h, std::move(data));
}

Image read_image_png(const std::filesystem::path& path) {
  int w = 0, h = 0;
  const auto bytes = read_raw(path, PNG_FORMAT_RGB, w, h);
  Image img(w, h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      for (int k = 0; k < 3; ++k) img.at(k, c, r) = bytes[(static_cast<std::size_t>(r) * w + c) * 3 + k] / 255.0f;
  return img;
}

}  // namespace acorrect
