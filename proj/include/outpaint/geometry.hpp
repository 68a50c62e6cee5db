#pragma once

// View-pair geometry: randomized area/aspect crop sampling for training and
// the deterministic anchor/target layouts used at generation time.

#include <cmath>
#include <utility>
#include <variant>

#include "outpaint/common.hpp"
#include "outpaint/image.hpp"
#include "outpaint/rng.hpp"

namespace outpaint {

struct ScaleRange {
  double lo = 0.0;
  double hi = 0.0;
};

inline void validate_scale_range(const ScaleRange& r, const char* name) {
  require(r.lo > 0.0 && r.lo <= r.hi && r.hi <= 1.0, ErrorKind::InvalidRange,
          std::string(name) + ": need 0 < lo <= hi <= 1");
}

inline void validate_aspect_range(const ScaleRange& r) {
  require(r.lo > 0.0 && r.lo <= r.hi, ErrorKind::InvalidRange,
          "aspect range: need 0 < lo <= hi");
}

// Draws one crop whose area fraction lies in `scale` and whose aspect ratio
// (width/height) lies in `aspect`. Up to 10 rejection attempts: area is
// uniform in [lo, hi] * H * W, aspect is log-uniform; a rounded candidate is
// accepted only if it fits and still satisfies both constraints after
// rounding. If all attempts fail, a deterministic centered crop at the lower
// area bound is used and *used_fallback is set.
inline CropRegion sample_resized_crop(int image_h, int image_w,
                                      const ScaleRange& scale,
                                      const ScaleRange& aspect, Rng& rng,
                                      bool* used_fallback = nullptr) {
  require(image_h > 0 && image_w > 0, ErrorKind::InvalidSize,
          "sample_resized_crop: image dimensions must be positive");
  validate_scale_range(scale, "crop scale");
  validate_aspect_range(aspect);
  if (used_fallback) *used_fallback = false;

  const double area = static_cast<double>(image_h) * image_w;
  const double log_lo = std::log(aspect.lo);
  const double log_hi = std::log(aspect.hi);

  auto satisfies = [&](int h, int w) {
    if (h < 1 || w < 1 || h > image_h || w > image_w) return false;
    const double frac = static_cast<double>(h) * w / area;
    const double ar = static_cast<double>(w) / h;
    return frac >= scale.lo && frac <= scale.hi && ar >= aspect.lo &&
           ar <= aspect.hi;
  };

  for (int attempt = 0; attempt < 10; ++attempt) {
    const double target_area = rng.uniform(scale.lo, scale.hi) * area;
    const double ar = std::exp(rng.uniform(log_lo, log_hi));
    const int w = static_cast<int>(std::lround(std::sqrt(target_area * ar)));
    const int h = static_cast<int>(std::lround(std::sqrt(target_area / ar)));
    if (!satisfies(h, w)) continue;
    const int top = static_cast<int>(rng.uniform_int(0, image_h - h));
    const int left = static_cast<int>(rng.uniform_int(0, image_w - w));
    return CropRegion{top, left, h, w};
  }

  // Deterministic fallback: centered crop at the lower area bound with the
  // in-range aspect closest to square. Rounding candidates are searched so
  // the result still satisfies the constraints.
  const double ar = std::clamp(1.0, aspect.lo, aspect.hi);
  const double target_area = scale.lo * area;
  const double w0 = std::sqrt(target_area * ar);
  const double h0 = std::sqrt(target_area / ar);
  const int w_cands[2] = {static_cast<int>(std::lround(w0)),
                          static_cast<int>(std::ceil(w0))};
  const int h_cands[2] = {static_cast<int>(std::lround(h0)),
                          static_cast<int>(std::ceil(h0))};
  for (int hi = 0; hi < 2; ++hi) {
    for (int wi = 0; wi < 2; ++wi) {
      const int h = h_cands[hi], w = w_cands[wi];
      if (!satisfies(h, w)) continue;
      if (used_fallback) *used_fallback = true;
      return CropRegion{(image_h - h) / 2, (image_w - w) / 2, h, w};
    }
  }
  fail(ErrorKind::UnsatisfiableCrop,
       "sample_resized_crop: no admissible crop, including the centered "
       "fallback, for the given image size and ranges");
}

struct CropPair {
  CropRegion anchor;
  CropRegion target;
  bool anchor_fallback = false;
  bool target_fallback = false;
};

// Independent anchor and target draws from the same image. Draw order is
// fixed (anchor first) so a given rng state always yields the same pair.
inline CropPair sample_crop_pair(int image_h, int image_w,
                                 const ScaleRange& anchor_scale,
                                 const ScaleRange& target_scale,
                                 const ScaleRange& aspect, Rng& rng) {
  CropPair pair;
  pair.anchor = sample_resized_crop(image_h, image_w, anchor_scale, aspect,
                                    rng, &pair.anchor_fallback);
  pair.target = sample_resized_crop(image_h, image_w, target_scale, aspect,
                                    rng, &pair.target_fallback);
  return pair;
}

// Generation-time layouts. MultipleMode expands the input by an area factor:
// the output frame is output_side^2 and the anchor occupies a centered
// square whose side is output_side / sqrt(multiple), rounded half up.
struct MultipleMode {
  double multiple = 1.0;
  int output_side = 0;
};

// ExplicitMode places caller-chosen anchor/target rectangles in a shared
// coordinate frame; the generated image covers the target rectangle.
struct ExplicitMode {
  CropRegion anchor;
  CropRegion target;
};

using OutpaintMode = std::variant<MultipleMode, ExplicitMode>;

struct RegionPair {
  CropRegion anchor;
  CropRegion target;
};

inline RegionPair mode_to_regions(const OutpaintMode& mode) {
  if (const auto* m = std::get_if<MultipleMode>(&mode)) {
    require(m->multiple >= 1.0, ErrorKind::InvalidRange,
            "MultipleMode: multiple must be >= 1");
    require(m->output_side >= 2, ErrorKind::InvalidRange,
            "MultipleMode: output_side must be >= 2");
    const double side = m->output_side / std::sqrt(m->multiple);
    const int s = static_cast<int>(std::floor(side + 0.5));
    require(s >= 1, ErrorKind::DegenerateAnchor,
            "MultipleMode: multiple too large, anchor side rounds to zero");
    const int off = (m->output_side - s) / 2;
    return RegionPair{CropRegion{off, off, s, s},
                      CropRegion{0, 0, m->output_side, m->output_side}};
  }
  const auto& e = std::get<ExplicitMode>(mode);
  require(e.anchor.valid(), ErrorKind::InvalidSize,
          "ExplicitMode: anchor region must have positive size");
  require(e.target.valid(), ErrorKind::InvalidSize,
          "ExplicitMode: target region must have positive size");
  return RegionPair{e.anchor, e.target};
}

}  // namespace outpaint
