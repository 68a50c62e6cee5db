#pragma once

// Lossless mapping between images and patch sequences. A (side, side, c)
// image becomes a (K*K, c*p*p) matrix: patches scan row-major over the
// grid, and within a patch the channel is the slowest index, then pixel
// row, then pixel column. encode/decode are exact inverses.

#include "outpaint/common.hpp"
#include "outpaint/image.hpp"
#include "outpaint/mat.hpp"

namespace outpaint {

struct PatchCodec {
  int image_side = 0;
  int patch_side = 0;
  int channels = 0;

  PatchCodec() = default;
  PatchCodec(int image_side_, int patch_side_, int channels_)
      : image_side(image_side_), patch_side(patch_side_), channels(channels_) {
    require(image_side > 0 && patch_side > 0 && channels > 0,
            ErrorKind::InvalidSize, "PatchCodec: sizes must be positive");
    require(image_side % patch_side == 0, ErrorKind::InvalidSize,
            "PatchCodec: patch_side must divide image_side");
  }

  int grid() const { return image_side / patch_side; }          // K
  int length() const { return grid() * grid(); }                // L
  int width() const { return channels * patch_side * patch_side; }  // C
};

template <typename S>
Mat<S> patchify(const Image& img, const PatchCodec& codec) {
  require(img.h == codec.image_side && img.w == codec.image_side &&
              img.c == codec.channels,
          ErrorKind::ShapeMismatch, "patchify: image does not match codec");
  const int K = codec.grid(), p = codec.patch_side, c = codec.channels;
  Mat<S> out(codec.length(), codec.width());
  for (int m = 0; m < K; ++m)
    for (int n = 0; n < K; ++n) {
      const int row = m * K + n;
      for (int ch = 0; ch < c; ++ch)
        for (int py = 0; py < p; ++py)
          for (int px = 0; px < p; ++px)
            out(row, (ch * p + py) * p + px) =
                static_cast<S>(img.at(m * p + py, n * p + px, ch));
    }
  return out;
}

// Same index map without the float image round trip: patch sequence to a
// (side*side, channels) pixel grid and back. Both are permutations, so each
// function is also the adjoint of the other.
template <typename S>
Mat<S> patches_to_grid(const Mat<S>& seq, const PatchCodec& codec) {
  require(seq.rows() == codec.length() && seq.cols() == codec.width(),
          ErrorKind::ShapeMismatch,
          "patches_to_grid: sequence does not match codec");
  const int K = codec.grid(), p = codec.patch_side, c = codec.channels;
  const int side = codec.image_side;
  Mat<S> grid(side * side, c);
  for (int m = 0; m < K; ++m)
    for (int n = 0; n < K; ++n) {
      const int row = m * K + n;
      for (int ch = 0; ch < c; ++ch)
        for (int py = 0; py < p; ++py)
          for (int px = 0; px < p; ++px)
            grid((m * p + py) * side + n * p + px, ch) =
                seq(row, (ch * p + py) * p + px);
    }
  return grid;
}

template <typename S>
Mat<S> grid_to_patches(const Mat<S>& grid, const PatchCodec& codec) {
  const int side = codec.image_side;
  require(grid.rows() == static_cast<Eigen::Index>(side) * side &&
              grid.cols() == codec.channels,
          ErrorKind::ShapeMismatch,
          "grid_to_patches: grid does not match codec");
  const int K = codec.grid(), p = codec.patch_side, c = codec.channels;
  Mat<S> seq(codec.length(), codec.width());
  for (int m = 0; m < K; ++m)
    for (int n = 0; n < K; ++n) {
      const int row = m * K + n;
      for (int ch = 0; ch < c; ++ch)
        for (int py = 0; py < p; ++py)
          for (int px = 0; px < p; ++px)
            seq(row, (ch * p + py) * p + px) =
                grid((m * p + py) * side + n * p + px, ch);
    }
  return seq;
}

template <typename S>
Image unpatchify(const Mat<S>& seq, const PatchCodec& codec) {
  require(seq.rows() == codec.length() && seq.cols() == codec.width(),
          ErrorKind::ShapeMismatch, "unpatchify: sequence does not match codec");
  const int K = codec.grid(), p = codec.patch_side, c = codec.channels;
  Image img(codec.image_side, codec.image_side, c);
  for (int m = 0; m < K; ++m)
    for (int n = 0; n < K; ++n) {
      const int row = m * K + n;
      for (int ch = 0; ch < c; ++ch)
        for (int py = 0; py < p; ++py)
          for (int px = 0; px < p; ++px)
            img.at(m * p + py, n * p + px, ch) =
                static_cast<float>(seq(row, (ch * p + py) * p + px));
    }
  return img;
}

}  // namespace outpaint
