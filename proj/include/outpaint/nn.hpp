#pragma once

// Neural building blocks with matching analytic backward passes. Forward
// functions fill a small cache struct; backward functions consume it and
// accumulate parameter gradients with +=, so one gradient buffer can be
// shared across a batch. Everything is templated on the scalar type: float
// for training, double for derivative checking.

#include <cmath>
#include <vector>

#include "outpaint/common.hpp"
#include "outpaint/mat.hpp"

namespace outpaint {

// ---------------------------------------------------------------- linear

// y = x W + b (b broadcast over rows).
template <typename S, typename WT, typename BT>
Mat<S> linear_forward(const Mat<S>& x, const WT& w, const BT& b) {
  Mat<S> y = x * w;
  y.rowwise() += b.row(0);
  return y;
}

template <typename S, typename WT, typename GW, typename GB>
Mat<S> linear_backward(const Mat<S>& dy, const Mat<S>& x, const WT& w,
                       GW&& dw, GB&& db) {
  dw.noalias() += x.transpose() * dy;
  db.row(0).noalias() += dy.colwise().sum();
  return dy * w.transpose();
}

// ------------------------------------------------------------ layer norm

template <typename S>
struct LayerNormCache {
  Mat<S> xhat;                 // normalized input
  std::vector<S> inv_std;      // per row
};

template <typename S, typename GT, typename BT>
Mat<S> layer_norm_forward(const Mat<S>& x, const GT& gamma, const BT& beta,
                          LayerNormCache<S>& cache, S eps = S(1e-5)) {
  const Eigen::Index rows = x.rows(), cols = x.cols();
  cache.xhat.resize(rows, cols);
  cache.inv_std.resize(rows);
  Mat<S> y(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const S mean = x.row(r).mean();
    const S var = (x.row(r).array() - mean).square().mean();
    const S inv = S(1) / std::sqrt(var + eps);
    cache.inv_std[r] = inv;
    cache.xhat.row(r) = (x.row(r).array() - mean) * inv;
    y.row(r) = cache.xhat.row(r).cwiseProduct(gamma.row(0)) + beta.row(0);
  }
  return y;
}

template <typename S, typename GT, typename GG, typename GB>
Mat<S> layer_norm_backward(const Mat<S>& dy, const LayerNormCache<S>& cache,
                           const GT& gamma, GG&& dgamma, GB&& dbeta) {
  const Eigen::Index rows = dy.rows(), cols = dy.cols();
  dbeta.row(0).noalias() += dy.colwise().sum();
  dgamma.row(0).noalias() += dy.cwiseProduct(cache.xhat).colwise().sum();
  Mat<S> dx(rows, cols);
  const S n = static_cast<S>(cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto dxhat =
        dy.row(r).cwiseProduct(gamma.row(0)).array();
    const S m1 = dxhat.sum() / n;
    const S m2 = (dxhat * cache.xhat.row(r).array()).sum() / n;
    dx.row(r) = ((dxhat - m1 - cache.xhat.row(r).array() * m2) *
                 cache.inv_std[r])
                    .matrix();
  }
  return dx;
}

// ------------------------------------------------------------------ gelu

// Exact (erf-based) GELU.
template <typename S>
Mat<S> gelu_forward(const Mat<S>& x) {
  return x.unaryExpr([](S v) {
    return static_cast<S>(0.5) * v *
           (S(1) + std::erf(v * static_cast<S>(M_SQRT1_2)));
  });
}

template <typename S>
Mat<S> gelu_backward(const Mat<S>& dy, const Mat<S>& x) {
  return dy.binaryExpr(x, [](S g, S v) {
    const S phi = static_cast<S>(0.5) *
                  (S(1) + std::erf(v * static_cast<S>(M_SQRT1_2)));
    const S pdf = std::exp(static_cast<S>(-0.5) * v * v) *
                  static_cast<S>(0.3989422804014327);  // 1/sqrt(2*pi)
    return g * (phi + v * pdf);
  });
}

// --------------------------------------------------------------- softmax

// Row-wise softmax, max-shifted for stability.
template <typename S>
Mat<S> softmax_rows(const Mat<S>& x) {
  Mat<S> y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const S mx = x.row(r).maxCoeff();
    y.row(r) = (x.row(r).array() - mx).exp();
    y.row(r) /= y.row(r).sum();
  }
  return y;
}

// Given a = softmax(s) and da, returns ds = a .* (da - sum(da .* a)).
template <typename S>
Mat<S> softmax_rows_backward(const Mat<S>& a, const Mat<S>& da) {
  Mat<S> ds(a.rows(), a.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const S dot = a.row(r).dot(da.row(r));
    ds.row(r) = a.row(r).cwiseProduct(
        (da.row(r).array() - dot).matrix());
  }
  return ds;
}

// -------------------------------------------------- multi-head attention

template <typename S>
struct AttentionCache {
  Mat<S> x;                 // block input (queries = keys = values source)
  Mat<S> q, k, v;           // projected, each rows x dim
  std::vector<Mat<S>> att;  // per-head softmax weights
  Mat<S> concat;            // concatenated head outputs before out proj
};

// Standard multi-head self-attention; per-head scale 1 / sqrt(dim/heads).
template <typename S, typename WT, typename BT>
Mat<S> attention_forward(const Mat<S>& x, int heads, const WT& wq,
                         const BT& bq, const WT& wk, const BT& bk,
                         const WT& wv, const BT& bv, const WT& wo,
                         const BT& bo, AttentionCache<S>& cache) {
  const Eigen::Index dim = wq.cols();
  require(dim % heads == 0, ErrorKind::InvalidDimension,
          "attention_forward: heads must divide dim");
  const Eigen::Index hd = dim / heads;
  const S scale = static_cast<S>(1.0 / std::sqrt(static_cast<double>(hd)));

  cache.x = x;
  cache.q = linear_forward(x, wq, bq);
  cache.k = linear_forward(x, wk, bk);
  cache.v = linear_forward(x, wv, bv);
  cache.att.assign(heads, Mat<S>());
  cache.concat.resize(x.rows(), dim);
  for (int h = 0; h < heads; ++h) {
    const auto qh = cache.q.middleCols(h * hd, hd);
    const auto kh = cache.k.middleCols(h * hd, hd);
    const auto vh = cache.v.middleCols(h * hd, hd);
    Mat<S> scores = qh * kh.transpose() * scale;
    cache.att[h] = softmax_rows(scores);
    cache.concat.middleCols(h * hd, hd).noalias() = cache.att[h] * vh;
  }
  return linear_forward(cache.concat, wo, bo);
}

template <typename S, typename WT, typename GW, typename GB>
Mat<S> attention_backward(const Mat<S>& dy, int heads,
                          const AttentionCache<S>& cache, const WT& wq,
                          const WT& wk, const WT& wv, const WT& wo, GW&& dwq,
                          GB&& dbq, GW&& dwk, GB&& dbk, GW&& dwv, GB&& dbv,
                          GW&& dwo, GB&& dbo) {
  const Eigen::Index dim = wq.cols();
  const Eigen::Index hd = dim / heads;
  const S scale = static_cast<S>(1.0 / std::sqrt(static_cast<double>(hd)));

  const Mat<S> dconcat = linear_backward(dy, cache.concat, wo, dwo, dbo);
  Mat<S> dq(cache.q.rows(), dim), dk(cache.k.rows(), dim),
      dv(cache.v.rows(), dim);
  for (int h = 0; h < heads; ++h) {
    const auto qh = cache.q.middleCols(h * hd, hd);
    const auto kh = cache.k.middleCols(h * hd, hd);
    const auto vh = cache.v.middleCols(h * hd, hd);
    const auto doh = dconcat.middleCols(h * hd, hd);
    const Mat<S> da = doh * vh.transpose();
    dv.middleCols(h * hd, hd).noalias() = cache.att[h].transpose() * doh;
    const Mat<S> ds = softmax_rows_backward(cache.att[h], da);
    dq.middleCols(h * hd, hd).noalias() = ds * kh * scale;
    dk.middleCols(h * hd, hd).noalias() = ds.transpose() * qh * scale;
  }
  Mat<S> dx = linear_backward(dq, cache.x, wq, dwq, dbq);
  dx += linear_backward(dk, cache.x, wk, dwk, dbk);
  dx += linear_backward(dv, cache.x, wv, dwv, dbv);
  return dx;
}

// --------------------------------------------- positional cross-attention

template <typename S>
struct CrossCache {
  Mat<S> e;    // query source (positional embedding), Lq x dim
  Mat<S> z;    // key/value source, Lk x dim
  Mat<S> q, k, v;
  Mat<S> att;  // Lq x Lk softmax weights
};

// Single-head cross-attention with scale 1 / sqrt(dim) and no biases or
// output projection: out = softmax(E Wq (z Wk)^T / sqrt(dim)) (z Wv).
// The query source carries positions only, so no gradient flows to it.
template <typename S, typename WT>
Mat<S> cross_attention_forward(const Mat<S>& e, const Mat<S>& z, const WT& wq,
                               const WT& wk, const WT& wv,
                               CrossCache<S>& cache) {
  require(e.cols() == z.cols(), ErrorKind::ShapeMismatch,
          "cross_attention_forward: query/key widths differ");
  const Eigen::Index dim = wq.cols();
  const S scale = static_cast<S>(1.0 / std::sqrt(static_cast<double>(dim)));
  cache.e = e;
  cache.z = z;
  cache.q.noalias() = e * wq;
  cache.k.noalias() = z * wk;
  cache.v.noalias() = z * wv;
  Mat<S> scores = cache.q * cache.k.transpose() * scale;
  cache.att = softmax_rows(scores);
  return cache.att * cache.v;
}

template <typename S, typename WT, typename GW>
Mat<S> cross_attention_backward(const Mat<S>& dy, const CrossCache<S>& cache,
                                const WT& wq, const WT& wk, const WT& wv,
                                GW&& dwq, GW&& dwk, GW&& dwv) {
  const Eigen::Index dim = wq.cols();
  const S scale = static_cast<S>(1.0 / std::sqrt(static_cast<double>(dim)));
  const Mat<S> da = dy * cache.v.transpose();
  const Mat<S> dv = cache.att.transpose() * dy;
  const Mat<S> ds = softmax_rows_backward(cache.att, da);
  const Mat<S> dq = ds * cache.k * scale;
  const Mat<S> dk = ds.transpose() * cache.q * scale;
  dwq.noalias() += cache.e.transpose() * dq;
  dwk.noalias() += cache.z.transpose() * dk;
  dwv.noalias() += cache.z.transpose() * dv;
  return dk * wk.transpose() + dv * wv.transpose();
}

// -------------------------------------------------------------- 2-D conv

// Direct same-padded KxK convolution over a (side*side, channels) pixel
// grid. Weights are laid out (in_ch * k * k, out_ch); the row index is
// (ic * k + ky) * k + kx.
template <typename S, typename WT, typename BT>
Mat<S> conv2d_forward(const Mat<S>& grid, int side, int kernel, const WT& w,
                      const BT& b) {
  const int c_in = static_cast<int>(grid.cols());
  const int c_out = static_cast<int>(w.cols());
  require(kernel >= 1 && kernel % 2 == 1, ErrorKind::InvalidSize,
          "conv2d_forward: kernel must be odd");
  require(w.rows() == static_cast<Eigen::Index>(c_in) * kernel * kernel,
          ErrorKind::ShapeMismatch, "conv2d_forward: weight shape mismatch");
  const int pad = kernel / 2;
  Mat<S> out(grid.rows(), c_out);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) {
      for (int oc = 0; oc < c_out; ++oc) out(y * side + x, oc) = b(0, oc);
      for (int ky = 0; ky < kernel; ++ky) {
        const int sy = y + ky - pad;
        if (sy < 0 || sy >= side) continue;
        for (int kx = 0; kx < kernel; ++kx) {
          const int sx = x + kx - pad;
          if (sx < 0 || sx >= side) continue;
          for (int ic = 0; ic < c_in; ++ic) {
            const S val = grid(sy * side + sx, ic);
            const int wrow = (ic * kernel + ky) * kernel + kx;
            for (int oc = 0; oc < c_out; ++oc)
              out(y * side + x, oc) += val * w(wrow, oc);
          }
        }
      }
    }
  return out;
}

template <typename S, typename WT, typename GW, typename GB>
Mat<S> conv2d_backward(const Mat<S>& dy, const Mat<S>& grid, int side,
                       int kernel, const WT& w, GW&& dw, GB&& db) {
  const int c_in = static_cast<int>(grid.cols());
  const int c_out = static_cast<int>(dy.cols());
  const int pad = kernel / 2;
  db.row(0).noalias() += dy.colwise().sum();
  Mat<S> dgrid = Mat<S>::Zero(grid.rows(), c_in);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x)
      for (int ky = 0; ky < kernel; ++ky) {
        const int sy = y + ky - pad;
        if (sy < 0 || sy >= side) continue;
        for (int kx = 0; kx < kernel; ++kx) {
          const int sx = x + kx - pad;
          if (sx < 0 || sx >= side) continue;
          for (int ic = 0; ic < c_in; ++ic) {
            const int wrow = (ic * kernel + ky) * kernel + kx;
            for (int oc = 0; oc < c_out; ++oc) {
              const S g = dy(y * side + x, oc);
              dw(wrow, oc) += grid(sy * side + sx, ic) * g;
              dgrid(sy * side + sx, ic) += w(wrow, oc) * g;
            }
          }
        }
      }
  return dgrid;
}

}  // namespace outpaint
