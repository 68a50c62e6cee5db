#pragma once

// Reconstruction metrics. PSNR = 10 log10(max_value^2 / mse); an exact
// match (mse == 0) yields +infinity, which aggregation treats as a sentinel
// and excludes, alongside any finite value above the configured cutoff.

#include <cmath>
#include <limits>
#include <vector>

#include "outpaint/common.hpp"
#include "outpaint/image.hpp"

namespace outpaint {

inline double mse(const Image& a, const Image& b) {
  require(a.h == b.h && a.w == b.w && a.c == b.c, ErrorKind::ShapeMismatch,
          "mse: image shapes differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - b.data[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.data.size());
}

inline double psnr(const Image& a, const Image& b, double max_value) {
  require(max_value > 0.0, ErrorKind::InvalidRange,
          "psnr: max_value must be > 0");
  const double m = mse(a, b);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(max_value * max_value / m);
}

// PSNR restricted to the window of the generated frame where the source
// view was placed. The source is resized to the window before comparing.
inline double center_psnr(const Image& generated, const Image& source,
                          const CropRegion& placement, double max_value) {
  require(placement.inside(generated.h, generated.w), ErrorKind::InvalidSize,
          "center_psnr: placement outside the generated frame");
  require(source.c == generated.c, ErrorKind::ShapeMismatch,
          "center_psnr: channel counts differ");
  const Image window = crop(generated, placement);
  const Image resized =
      resize_bilinear(source, placement.height, placement.width);
  return psnr(window, resized, max_value);
}

struct PsnrAggregate {
  double mean = 0.0;
  int included = 0;
  int excluded_infinite = 0;
  int excluded_above_cutoff = 0;
};

// Mean of the finite values at or below `cutoff`. Infinities (exact
// matches) and outliers above the cutoff are counted separately; if
// nothing survives the filter, EmptyAfterFilter is thrown.
inline PsnrAggregate aggregate_psnr(const std::vector<double>& values,
                                    double cutoff = 1000.0) {
  PsnrAggregate agg;
  double sum = 0.0;
  for (double value : values) {
    if (std::isinf(value)) {
      ++agg.excluded_infinite;
    } else if (value > cutoff) {
      ++agg.excluded_above_cutoff;
    } else {
      sum += value;
      ++agg.included;
    }
  }
  require(agg.included > 0, ErrorKind::EmptyAfterFilter,
          "aggregate_psnr: no finite values at or below the cutoff");
  agg.mean = sum / agg.included;
  return agg;
}

}  // namespace outpaint
