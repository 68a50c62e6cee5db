#pragma once

// In-memory image type plus the bilinear resize used everywhere views are
// rescaled. Pixels are float32, interleaved row-major (y, x, channel);
// model-facing images live in [-1, 1], 8-bit I/O maps through [0, 255].

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "outpaint/common.hpp"

namespace outpaint {

struct Image {
  int h = 0;
  int w = 0;
  int c = 0;
  std::vector<float> data;  // size h*w*c

  Image() = default;
  Image(int h_, int w_, int c_, float fill = 0.0f)
      : h(h_), w(w_), c(c_),
        data(static_cast<std::size_t>(h_) * w_ * c_, fill) {
    require(h_ > 0 && w_ > 0 && c_ > 0, ErrorKind::InvalidSize,
            "Image: dimensions must be positive");
  }

  float& at(int y, int x, int ch) {
    return data[(static_cast<std::size_t>(y) * w + x) * c + ch];
  }
  float at(int y, int x, int ch) const {
    return data[(static_cast<std::size_t>(y) * w + x) * c + ch];
  }
  std::size_t size() const { return data.size(); }
};

// Axis-aligned integer rectangle (top/left corner, height/width in pixels).
struct CropRegion {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;

  bool valid() const { return height > 0 && width > 0; }
  bool inside(int image_h, int image_w) const {
    return valid() && top >= 0 && left >= 0 && top + height <= image_h &&
           left + width <= image_w;
  }
  bool operator==(const CropRegion& o) const {
    return top == o.top && left == o.left && height == o.height &&
           width == o.width;
  }
};

inline Image crop(const Image& img, const CropRegion& r) {
  require(r.inside(img.h, img.w), ErrorKind::InvalidSize,
          "crop: region outside image bounds");
  Image out(r.height, r.width, img.c);
  for (int y = 0; y < r.height; ++y)
    for (int x = 0; x < r.width; ++x)
      for (int ch = 0; ch < img.c; ++ch)
        out.at(y, x, ch) = img.at(r.top + y, r.left + x, ch);
  return out;
}

// Bilinear resample with half-pixel-centered sample points and edge clamp.
// Same-size calls return a bit-identical copy.
inline Image resize_bilinear(const Image& img, int out_h, int out_w) {
  require(out_h > 0 && out_w > 0, ErrorKind::InvalidSize,
          "resize_bilinear: output dimensions must be positive");
  require(img.h > 0 && img.w > 0, ErrorKind::InvalidSize,
          "resize_bilinear: empty input image");
  if (out_h == img.h && out_w == img.w) return img;

  Image out(out_h, out_w, img.c);
  const double sy = static_cast<double>(img.h) / out_h;
  const double sx = static_cast<double>(img.w) / out_w;
  for (int y = 0; y < out_h; ++y) {
    const double src_y = (y + 0.5) * sy - 0.5;
    const double fy = std::floor(src_y);
    int y0 = static_cast<int>(fy);
    const double wy = src_y - fy;
    int y1 = y0 + 1;
    y0 = std::clamp(y0, 0, img.h - 1);
    y1 = std::clamp(y1, 0, img.h - 1);
    for (int x = 0; x < out_w; ++x) {
      const double src_x = (x + 0.5) * sx - 0.5;
      const double fx = std::floor(src_x);
      int x0 = static_cast<int>(fx);
      const double wx = src_x - fx;
      int x1 = x0 + 1;
      x0 = std::clamp(x0, 0, img.w - 1);
      x1 = std::clamp(x1, 0, img.w - 1);
      for (int ch = 0; ch < img.c; ++ch) {
        const double top =
            (1.0 - wx) * img.at(y0, x0, ch) + wx * img.at(y0, x1, ch);
        const double bot =
            (1.0 - wx) * img.at(y1, x0, ch) + wx * img.at(y1, x1, ch);
        out.at(y, x, ch) = static_cast<float>((1.0 - wy) * top + wy * bot);
      }
    }
  }
  return out;
}

// [0, 255] bytes -> [-1, 1] floats and back. The round trip through u8 is
// exact at the 256 representable levels; arbitrary floats land within one
// quantization level.
inline float u8_to_unit(std::uint8_t v) {
  return static_cast<float>(v) / 127.5f - 1.0f;
}

inline std::uint8_t unit_to_u8(float v) {
  const float x = std::clamp(v, -1.0f, 1.0f);
  const float scaled = (x + 1.0f) * 127.5f;
  const long r = std::lround(scaled);
  return static_cast<std::uint8_t>(std::clamp(r, 0L, 255L));
}

inline bool all_finite(const Image& img) {
  for (float v : img.data)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace outpaint
