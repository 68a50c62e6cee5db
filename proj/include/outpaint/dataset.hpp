#pragma once

// Training data: a deterministic synthetic generator whose images encode
// their own geometry (per-axis gradients, so any crop reveals where it sits
// in the frame), plus loading of png/ppm folders in sorted filename order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "outpaint/common.hpp"
#include "outpaint/image.hpp"
#include "outpaint/imageio.hpp"
#include "outpaint/rng.hpp"

namespace outpaint {

struct SynthSpec {
  int resolution = 64;
  int channels = 3;
  int min_shapes = 2;
  int max_shapes = 5;
  double shape_amp = 0.1;   // per-channel additive amplitude of a shape
  double noise_amp = 0.05;  // smooth value-noise amplitude
  int noise_cell = 8;       // lattice cell size in pixels

  void validate() const {
    require(resolution >= 2, ErrorKind::InvalidSize,
            "SynthSpec: resolution must be >= 2");
    require(channels >= 1, ErrorKind::InvalidSize,
            "SynthSpec: channels must be >= 1");
    require(min_shapes >= 0 && min_shapes <= max_shapes,
            ErrorKind::InvalidRange, "SynthSpec: bad shape count range");
    require(shape_amp >= 0.0 && noise_amp >= 0.0, ErrorKind::InvalidRange,
            "SynthSpec: amplitudes must be >= 0");
    require(noise_cell >= 1, ErrorKind::InvalidSize,
            "SynthSpec: noise_cell must be >= 1");
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace detail

// Image `index` of the dataset seeded by `seed`; every call with the same
// arguments returns the same pixels. Channel 0 ramps along x, channel 1
// along y, further channels along the diagonal; shapes and smooth noise
// perturb but never overwhelm the ramps (ramp swing 1.4 vs. worst-case
// perturbation 2 * (max_shapes * shape_amp + noise_amp) = 1.1 by default).
inline Image synth_image(const SynthSpec& spec, std::uint64_t seed,
                         std::int64_t index) {
  spec.validate();
  Rng rng(detail::splitmix64(seed + detail::splitmix64(
                                        static_cast<std::uint64_t>(index))));
  const int res = spec.resolution;
  Image img(res, res, spec.channels);

  // Base ramps in [-0.7, 0.7].
  for (int y = 0; y < res; ++y)
    for (int x = 0; x < res; ++x) {
      const float gx = -0.7f + 1.4f * x / (res - 1);
      const float gy = -0.7f + 1.4f * y / (res - 1);
      for (int ch = 0; ch < spec.channels; ++ch) {
        const float base = ch % 3 == 0 ? gx
                           : ch % 3 == 1 ? gy
                                         : 0.5f * (gx + gy);
        img.at(y, x, ch) = base;
      }
    }

  // Additive rectangles and ellipses with per-channel amplitudes.
  const auto n_shapes = rng.uniform_int(spec.min_shapes, spec.max_shapes);
  for (std::int64_t s = 0; s < n_shapes; ++s) {
    const bool is_rect = rng.uniform_int(0, 1) == 0;
    const double cy = rng.uniform(0.0, res);
    const double cx = rng.uniform(0.0, res);
    const double hy = rng.uniform(0.05 * res, 0.25 * res);
    const double hx = rng.uniform(0.05 * res, 0.25 * res);
    std::vector<float> amp(static_cast<std::size_t>(spec.channels));
    for (auto& a : amp)
      a = static_cast<float>(rng.uniform(-spec.shape_amp, spec.shape_amp));
    for (int y = 0; y < res; ++y)
      for (int x = 0; x < res; ++x) {
        const double dy = (y - cy) / hy, dx = (x - cx) / hx;
        const bool hit = is_rect ? std::abs(dy) <= 1.0 && std::abs(dx) <= 1.0
                                 : dy * dy + dx * dx <= 1.0;
        if (hit)
          for (int ch = 0; ch < spec.channels; ++ch)
            img.at(y, x, ch) += amp[static_cast<std::size_t>(ch)];
      }
  }

  // Smooth value noise: random lattice, bilinear in between.
  if (spec.noise_amp > 0.0) {
    const int cells = res / spec.noise_cell + 2;
    std::vector<float> lattice(static_cast<std::size_t>(cells) * cells *
                               spec.channels);
    for (auto& v : lattice)
      v = static_cast<float>(rng.uniform(-spec.noise_amp, spec.noise_amp));
    auto lat = [&](int cy, int cx, int ch) {
      return lattice[(static_cast<std::size_t>(cy) * cells + cx) *
                         spec.channels +
                     ch];
    };
    for (int y = 0; y < res; ++y)
      for (int x = 0; x < res; ++x) {
        const double fy = static_cast<double>(y) / spec.noise_cell;
        const double fx = static_cast<double>(x) / spec.noise_cell;
        const int cy = static_cast<int>(fy), cx = static_cast<int>(fx);
        const double wy = fy - cy, wx = fx - cx;
        for (int ch = 0; ch < spec.channels; ++ch) {
          const double top = (1 - wx) * lat(cy, cx, ch) + wx * lat(cy, cx + 1, ch);
          const double bot =
              (1 - wx) * lat(cy + 1, cx, ch) + wx * lat(cy + 1, cx + 1, ch);
          img.at(y, x, ch) += static_cast<float>((1 - wy) * top + wy * bot);
        }
      }
  }

  for (auto& v : img.data) v = std::clamp(v, -1.0f, 1.0f);
  return img;
}

inline std::vector<Image> make_synthetic_dataset(const SynthSpec& spec,
                                                 std::uint64_t seed,
                                                 std::int64_t count) {
  require(count >= 1, ErrorKind::InvalidRange,
          "make_synthetic_dataset: count must be >= 1");
  std::vector<Image> images;
  images.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i)
    images.push_back(synth_image(spec, seed, i));
  return images;
}

// Loads every supported image (png/ppm) in a folder, sorted by filename so
// dataset order is reproducible, and resizes to resolution^2.
inline std::vector<Image> load_image_folder(const std::string& folder,
                                            int resolution, int channels = 3) {
  namespace fs = std::filesystem;
  require(fs::is_directory(folder), ErrorKind::IoFailure,
          "load_image_folder: not a directory: " + folder);
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(folder)) {
    if (!entry.is_regular_file()) continue;
    const std::string p = entry.path().string();
    if (supported_image_ext(p)) files.push_back(p);
  }
  require(!files.empty(), ErrorKind::EmptyDataset,
          "load_image_folder: no png/ppm files in " + folder);
  std::sort(files.begin(), files.end());
  std::vector<Image> images;
  images.reserve(files.size());
  for (const std::string& path : files) {
    const Image img = to_unit(read_image(path, channels));
    images.push_back(resize_bilinear(img, resolution, resolution));
  }
  return images;
}

}  // namespace outpaint
