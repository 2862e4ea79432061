#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

namespace terracal {

struct Rgb8 {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb8&) const = default;
};

/// Row-major single-plane image. Pixel (x, y) lives at data[y*width + x];
/// integer coordinates address pixel centers.
template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, T fill = T{}) : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  T& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  const T& at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

  bool contains(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
  bool empty() const { return data.empty(); }

  bool operator==(const Image&) const = default;
};

using ImageU8 = Image<std::uint8_t>;
using ImageU16 = Image<std::uint16_t>;
using ImageF32 = Image<float>;
using ImageRgb8 = Image<Rgb8>;

/// Rec.601 luma.
ImageU8 to_gray(const ImageRgb8& img);

ImageRgb8 to_rgb(const ImageU8& img);

/// Standard 256-bin histogram equalization.
ImageU8 equalize_histogram(const ImageU8& img);

/// 5x5 box blur with border clamping, integer arithmetic (rounded mean).
ImageU8 box_blur5(const ImageU8& img);

/// Extracts the w x h rectangle with top-left (x0, y0); must lie inside.
template <typename T>
Image<T> crop(const Image<T>& img, int x0, int y0, int w, int h) {
  Image<T> out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.at(x, y) = img.at(x0 + x, y0 + y);
  return out;
}

/// Bilinear resample to (out_w, out_h); source sampling clamped at borders.
ImageU8 resize_bilinear(const ImageU8& img, int out_w, int out_h);

}  // namespace terracal
