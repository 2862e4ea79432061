#include "terracal/image.hpp"

#include <array>
#include <cmath>
#include <cstddef>

namespace terracal {

ImageU8 to_gray(const ImageRgb8& img) {
  ImageU8 out(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    const Rgb8 p = img.data[i];
    const double y = 0.299 * p.r + 0.587 * p.g + 0.114 * p.b;
    out.data[i] = static_cast<std::uint8_t>(std::lround(std::min(255.0, y)));
  }
  return out;
}

ImageRgb8 to_rgb(const ImageU8& img) {
  ImageRgb8 out(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i) out.data[i] = {img.data[i], img.data[i], img.data[i]};
  return out;
}

ImageU8 equalize_histogram(const ImageU8& img) {
  if (img.empty()) return img;
  std::array<std::size_t, 256> hist{};
  for (const auto v : img.data) ++hist[v];

  std::array<std::uint8_t, 256> lut{};
  std::size_t cdf = 0;
  std::size_t cdf_min = 0;
  for (int v = 0; v < 256; ++v) {
    if (hist[v] > 0) {
      cdf_min = hist[v];
      break;
    }
  }
  const std::size_t total = img.data.size();
  const double denom = static_cast<double>(total - cdf_min);
  for (int v = 0; v < 256; ++v) {
    cdf += hist[v];
    if (denom <= 0.0) {
      lut[v] = static_cast<std::uint8_t>(v);  // constant image: identity
    } else {
      const double scaled = 255.0 * static_cast<double>(cdf - cdf_min) / denom;
      lut[v] = static_cast<std::uint8_t>(std::lround(std::clamp(scaled, 0.0, 255.0)));
    }
  }
  ImageU8 out(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i) out.data[i] = lut[img.data[i]];
  return out;
}

ImageU8 box_blur5(const ImageU8& img) {
  ImageU8 out(img.width, img.height);
  const int w = img.width, h = img.height;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int sum = 0;
      for (int dy = -2; dy <= 2; ++dy) {
        const int yy = std::clamp(y + dy, 0, h - 1);
        for (int dx = -2; dx <= 2; ++dx) {
          const int xx = std::clamp(x + dx, 0, w - 1);
          sum += img.at(xx, yy);
        }
      }
      out.at(x, y) = static_cast<std::uint8_t>((sum + 12) / 25);
    }
  }
  return out;
}

ImageU8 resize_bilinear(const ImageU8& img, int out_w, int out_h) {
  ImageU8 out(out_w, out_h);
  if (img.empty() || out_w <= 0 || out_h <= 0) return out;
  const double sx = static_cast<double>(img.width) / out_w;
  const double sy = static_cast<double>(img.height) / out_h;
  for (int y = 0; y < out_h; ++y) {
    const double v = (y + 0.5) * sy - 0.5;
    for (int x = 0; x < out_w; ++x) {
      const double u = (x + 0.5) * sx - 0.5;
      const int x0 = std::clamp(static_cast<int>(std::floor(u)), 0, img.width - 1);
      const int y0 = std::clamp(static_cast<int>(std::floor(v)), 0, img.height - 1);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const int y1 = std::min(y0 + 1, img.height - 1);
      const double fx = std::clamp(u - x0, 0.0, 1.0);
      const double fy = std::clamp(v - y0, 0.0, 1.0);
      const double val = (1 - fy) * ((1 - fx) * img.at(x0, y0) + fx * img.at(x1, y0)) +
                         fy * ((1 - fx) * img.at(x0, y1) + fx * img.at(x1, y1));
      out.at(x, y) = static_cast<std::uint8_t>(std::lround(std::clamp(val, 0.0, 255.0)));
    }
  }
  return out;
}

}  // namespace terracal
