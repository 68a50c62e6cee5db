#pragma once

// Relative positional encoding between an anchor view and a target view.
//
// Both views are carved into KxK patch grids. Each target patch center is
// expressed in units of anchor patches, relative to the anchor's top-left
// corner, via one affine map per axis:
//
//   col_bias  = K_a * (target.left - anchor.left) / anchor.width
//   col_scale = (target.width * K_a) / (K_t * anchor.width)
//   cols[n]   = col_bias + n * col_scale          (n = 0..K_t-1)
//
// and the same for rows with top/height. The anchor's own grid against
// itself is exactly the identity lattice 0..K-1. Coordinates are turned
// into vectors by a banked sine/cosine embedding (half the width per axis,
// sine bank then cosine bank, rows first), optionally replaced by a small
// learned two-layer map or by zeros.

#include <cmath>
#include <cstdint>
#include <vector>

#include "outpaint/common.hpp"
#include "outpaint/geometry.hpp"
#include "outpaint/mat.hpp"
#include "outpaint/rng.hpp"

namespace outpaint {

struct RelativeGrid {
  int k_anchor = 0;
  int k_target = 0;
  double row_bias = 0.0, row_scale = 0.0;
  double col_bias = 0.0, col_scale = 0.0;
  std::vector<double> rows;  // size k_target
  std::vector<double> cols;  // size k_target

  int length() const { return k_target * k_target; }
  // Row-major patch order: entry i covers (rows[i / k_target], cols[i % k_target]).
  double row_of(int i) const { return rows[i / k_target]; }
  double col_of(int i) const { return cols[i % k_target]; }
};

inline RelativeGrid relative_grid(const CropRegion& anchor,
                                  const CropRegion& target, int k_anchor,
                                  int k_target) {
  require(anchor.valid(), ErrorKind::InvalidSize,
          "relative_grid: anchor region must have positive size");
  require(target.valid(), ErrorKind::InvalidSize,
          "relative_grid: target region must have positive size");
  require(k_anchor >= 1 && k_target >= 1, ErrorKind::InvalidRange,
          "relative_grid: grid sizes must be >= 1");

  RelativeGrid g;
  g.k_anchor = k_anchor;
  g.k_target = k_target;
  g.row_bias = k_anchor * static_cast<double>(target.top - anchor.top) /
               anchor.height;
  g.row_scale = static_cast<double>(target.height) * k_anchor /
                (static_cast<double>(k_target) * anchor.height);
  g.col_bias = k_anchor * static_cast<double>(target.left - anchor.left) /
               anchor.width;
  g.col_scale = static_cast<double>(target.width) * k_anchor /
                (static_cast<double>(k_target) * anchor.width);
  g.rows.resize(k_target);
  g.cols.resize(k_target);
  for (int i = 0; i < k_target; ++i) {
    g.rows[i] = g.row_bias + i * g.row_scale;
    g.cols[i] = g.col_bias + i * g.col_scale;
  }
  return g;
}

// The lattice a view forms against itself: rows = cols = 0..k-1.
inline RelativeGrid identity_grid(int k) {
  return relative_grid(CropRegion{0, 0, k, k}, CropRegion{0, 0, k, k}, k, k);
}

// One axis of the banked embedding: d values, first d/2 sines then d/2
// cosines, frequency omega_k = base^(-2k/d).
inline void sincos_axis(double v, int d, double base, double* out) {
  const int half = d / 2;
  for (int k = 0; k < half; ++k) {
    const double omega = std::pow(base, -2.0 * k / d);
    out[k] = std::sin(v * omega);
    out[half + k] = std::cos(v * omega);
  }
}

// Full 2-D embedding: row axis in the first dim/2 columns, column axis in
// the second. dim must be divisible by 4 so each axis splits evenly into
// sine and cosine banks.
inline MatXd sincos_embed(const RelativeGrid& grid, int dim,
                          double base = 1.0e4) {
  require(dim > 0 && dim % 4 == 0, ErrorKind::InvalidDimension,
          "sincos_embed: dim must be a positive multiple of 4");
  const int half = dim / 2;
  const int kt = grid.k_target;
  MatXd row_bank(kt, half), col_bank(kt, half);
  for (int i = 0; i < kt; ++i) {
    sincos_axis(grid.rows[i], half, base, row_bank.row(i).data());
    sincos_axis(grid.cols[i], half, base, col_bank.row(i).data());
  }
  MatXd out(grid.length(), dim);
  for (int i = 0; i < grid.length(); ++i) {
    out.row(i).head(half) = row_bank.row(i / kt);
    out.row(i).tail(half) = col_bank.row(i % kt);
  }
  return out;
}

// Sinusoidal embedding of a (possibly fractional) timestep: a single-axis
// bank across the full width. dim must be even.
inline RowVec<double> timestep_embed(double t, int dim, double base = 1.0e4) {
  require(dim > 0 && dim % 2 == 0, ErrorKind::InvalidDimension,
          "timestep_embed: dim must be a positive even number");
  RowVec<double> out(dim);
  sincos_axis(t, dim, base, out.data());
  return out;
}

// Learned alternative: (row, col) -> R^dim through two affine layers with a
// tanh in between. Weights are supplied externally; all-zero weights give
// the zero embedding.
struct LearnableMap {
  int dim = 0;
  int hidden = 0;
  MatXd w1;  // 2 x hidden
  RowVec<double> b1;
  MatXd w2;  // hidden x dim
  RowVec<double> b2;

  static LearnableMap zeros(int dim, int hidden) {
    require(dim > 0 && hidden > 0, ErrorKind::InvalidDimension,
            "LearnableMap: dim and hidden must be positive");
    LearnableMap m;
    m.dim = dim;
    m.hidden = hidden;
    m.w1 = MatXd::Zero(2, hidden);
    m.b1 = RowVec<double>::Zero(hidden);
    m.w2 = MatXd::Zero(hidden, dim);
    m.b2 = RowVec<double>::Zero(dim);
    return m;
  }

  static LearnableMap random(int dim, int hidden, Rng& rng) {
    LearnableMap m = zeros(dim, hidden);
    const double a1 = 1.0 / std::sqrt(2.0);
    const double a2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (int i = 0; i < m.w1.size(); ++i)
      m.w1.data()[i] = rng.uniform(-a1, a1);
    for (int i = 0; i < m.w2.size(); ++i)
      m.w2.data()[i] = rng.uniform(-a2, a2);
    return m;
  }

  RowVec<double> apply(double row, double col) const {
    RowVec<double> in(2);
    in << row, col;
    RowVec<double> h = (in * w1 + b1).array().tanh().matrix();
    return h * w2 + b2;
  }
};

enum class PeVariant { none, learnable, sincos };

inline const char* to_string(PeVariant v) {
  switch (v) {
    case PeVariant::none: return "none";
    case PeVariant::learnable: return "learnable";
    case PeVariant::sincos: return "sincos";
  }
  return "?";
}

// Uniform entry point for all three embedding variants. `map` is required
// only for the learnable variant.
inline MatXd embed_variant(const RelativeGrid& grid, PeVariant variant,
                           int dim, const LearnableMap* map = nullptr) {
  switch (variant) {
    case PeVariant::none:
      return MatXd::Zero(grid.length(), dim);
    case PeVariant::sincos:
      return sincos_embed(grid, dim);
    case PeVariant::learnable: {
      require(map != nullptr, ErrorKind::MissingParams,
              "embed_variant: learnable variant needs a LearnableMap");
      require(map->dim == dim, ErrorKind::InvalidDimension,
              "embed_variant: LearnableMap width does not match dim");
      MatXd out(grid.length(), dim);
      for (int i = 0; i < grid.length(); ++i)
        out.row(i) = map->apply(grid.row_of(i), grid.col_of(i));
      return out;
    }
  }
  fail(ErrorKind::InvalidRange, "embed_variant: unknown variant");
}

}  // namespace outpaint
