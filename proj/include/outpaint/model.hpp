#pragma once

// The denoiser: a transformer that reads the noisy target view and the
// clean anchor view as patch sequences and is steered to the target's
// location purely through positional-embedding queries in a cross-attention
// stage. Pipeline:
//
//   concat(z_t, z_a) -> linear -> (+ anchor lattice embedding, + timestep
//   embedding) -> n_enc pre-norm transformer blocks -> positional
//   cross-attention (queries = target embedding) -> n_dec blocks ->
//   linear head -> 2-D conv over the assembled pixel grid -> patches.
//
// Parameters live in one flat buffer described by a ModelLayout, so the
// optimizer, checkpointing and derivative checks all see a single vector.
// Forward fills a cache; backward replays it and produces the gradient in
// the same flat layout.

#include <cstdint>
#include <string>
#include <vector>

#include "outpaint/codec.hpp"
#include "outpaint/common.hpp"
#include "outpaint/diffusion.hpp"
#include "outpaint/mat.hpp"
#include "outpaint/nn.hpp"
#include "outpaint/rng.hpp"
#include "outpaint/rpe.hpp"

namespace outpaint {

enum class PredictionTarget { noise, x0 };

inline const char* to_string(PredictionTarget t) {
  return t == PredictionTarget::noise ? "noise" : "x0";
}

struct ModelConfig {
  int image_side = 64;
  int patch_side = 8;
  int channels = 3;
  int hidden_dim = 128;
  int n_enc = 2;
  int n_dec = 2;
  int heads = 4;
  int ff_mult = 4;
  int conv_kernel = 3;
  bool anchor_pe = true;
  PredictionTarget target = PredictionTarget::noise;

  int grid() const { return image_side / patch_side; }
  int seq_len() const { return grid() * grid(); }
  int patch_width() const { return channels * patch_side * patch_side; }
  int ff_dim() const { return hidden_dim * ff_mult; }
  PatchCodec codec() const {
    return PatchCodec(image_side, patch_side, channels);
  }

  void validate() const {
    require(image_side > 0 && patch_side > 0 && channels > 0,
            ErrorKind::InvalidSize, "ModelConfig: sizes must be positive");
    require(image_side % patch_side == 0, ErrorKind::InvalidSize,
            "ModelConfig: patch_side must divide image_side");
    require(hidden_dim > 0 && hidden_dim % 4 == 0, ErrorKind::InvalidDimension,
            "ModelConfig: hidden_dim must be a positive multiple of 4");
    require(heads > 0 && hidden_dim % heads == 0, ErrorKind::InvalidDimension,
            "ModelConfig: heads must divide hidden_dim");
    require(n_enc >= 1 && n_dec >= 1, ErrorKind::InvalidRange,
            "ModelConfig: need at least one block on each side");
    require(ff_mult >= 1, ErrorKind::InvalidRange,
            "ModelConfig: ff_mult must be >= 1");
    require(conv_kernel >= 1 && conv_kernel % 2 == 1, ErrorKind::InvalidSize,
            "ModelConfig: conv_kernel must be odd and positive");
  }
};

// ------------------------------------------------------- parameter layout

struct Seg {
  std::int64_t offset = 0;
  int rows = 0;
  int cols = 0;
  std::int64_t size() const {
    return static_cast<std::int64_t>(rows) * cols;
  }
};

struct BlockSegs {
  Seg ln1_g, ln1_b;
  Seg wq, bq, wk, bk, wv, bv, wo, bo;
  Seg ln2_g, ln2_b;
  Seg w1, b1, w2, b2;
};

struct ModelLayout {
  Seg in_w, in_b;
  std::vector<BlockSegs> enc;
  Seg cx_wq, cx_wk, cx_wv;
  std::vector<BlockSegs> dec;
  Seg out_w, out_b;
  Seg conv_w, conv_b;
  std::int64_t total = 0;
};

inline ModelLayout build_layout(const ModelConfig& cfg) {
  cfg.validate();
  const int C = cfg.patch_width(), D = cfg.hidden_dim, F = cfg.ff_dim();
  ModelLayout lay;
  std::int64_t at = 0;
  auto add = [&at](int rows, int cols) {
    Seg s{at, rows, cols};
    at += s.size();
    return s;
  };
  auto add_block = [&] {
    BlockSegs b;
    b.ln1_g = add(1, D);
    b.ln1_b = add(1, D);
    b.wq = add(D, D);
    b.bq = add(1, D);
    b.wk = add(D, D);
    b.bk = add(1, D);
    b.wv = add(D, D);
    b.bv = add(1, D);
    b.wo = add(D, D);
    b.bo = add(1, D);
    b.ln2_g = add(1, D);
    b.ln2_b = add(1, D);
    b.w1 = add(D, F);
    b.b1 = add(1, F);
    b.w2 = add(F, D);
    b.b2 = add(1, D);
    return b;
  };
  lay.in_w = add(2 * C, D);
  lay.in_b = add(1, D);
  for (int i = 0; i < cfg.n_enc; ++i) lay.enc.push_back(add_block());
  lay.cx_wq = add(D, D);
  lay.cx_wk = add(D, D);
  lay.cx_wv = add(D, D);
  for (int i = 0; i < cfg.n_dec; ++i) lay.dec.push_back(add_block());
  lay.out_w = add(D, C);
  lay.out_b = add(1, C);
  lay.conv_w = add(cfg.channels * cfg.conv_kernel * cfg.conv_kernel,
                   cfg.channels);
  lay.conv_b = add(1, cfg.channels);
  lay.total = at;
  return lay;
}

inline std::int64_t param_count(const ModelConfig& cfg) {
  return build_layout(cfg).total;
}

// ------------------------------------------------------------- parameters

template <typename S>
struct DenoiserParams {
  ModelConfig cfg;
  ModelLayout layout;
  std::vector<S> flat;
  bool initialized = false;

  DenoiserParams() = default;
  explicit DenoiserParams(const ModelConfig& config)
      : cfg(config), layout(build_layout(config)),
        flat(static_cast<std::size_t>(layout.total), S(0)) {}

  std::int64_t size() const { return layout.total; }

  MatMap<S> map(const Seg& s) {
    return MatMap<S>(flat.data() + s.offset, s.rows, s.cols);
  }
  ConstMatMap<S> map(const Seg& s) const {
    return ConstMatMap<S>(flat.data() + s.offset, s.rows, s.cols);
  }

  void set_zero() { std::fill(flat.begin(), flat.end(), S(0)); }

  // Scaled-uniform init for projections, identity for layer norms, zeros
  // for all biases and for the affine output head. Zeroing the head makes
  // an untrained model output exactly zero (zeros pass through the conv,
  // whose bias is zero) without cutting the gradient path: the conv keeps
  // a normal-scale init, so the head sees a full-strength gradient at the
  // first step and every other weight from the second. Zeroing the conv
  // instead stalls training for thousands of steps, because the tiny conv
  // weights gate all upstream gradients while their own gradient signal is
  // noise-dominated. Draw order follows the layout so a seed fixes the
  // parameters completely.
  void init_random(Rng& rng) {
    set_zero();
    auto fill = [&](const Seg& s) {
      const double a = 1.0 / std::sqrt(static_cast<double>(s.rows));
      MatMap<S> m = map(s);
      for (std::int64_t i = 0; i < s.size(); ++i)
        m.data()[i] = static_cast<S>(rng.uniform(-a, a));
    };
    auto ones = [&](const Seg& s) { map(s).setOnes(); };
    auto init_block = [&](const BlockSegs& b) {
      ones(b.ln1_g);
      fill(b.wq);
      fill(b.wk);
      fill(b.wv);
      fill(b.wo);
      ones(b.ln2_g);
      fill(b.w1);
      fill(b.w2);
    };
    fill(layout.in_w);
    for (const auto& b : layout.enc) init_block(b);
    fill(layout.cx_wq);
    fill(layout.cx_wk);
    fill(layout.cx_wv);
    for (const auto& b : layout.dec) init_block(b);
    // out_w, out_b stay zero
    fill(layout.conv_w);
    initialized = true;
  }
};

// ---------------------------------------------------------------- forward

template <typename S>
struct BlockCache {
  Mat<S> x;   // block input
  LayerNormCache<S> ln1;
  AttentionCache<S> att;
  Mat<S> x2;  // post-attention residual stream
  LayerNormCache<S> ln2;
  Mat<S> xn2;
  Mat<S> u1;  // pre-activation
  Mat<S> g;   // activation output
};

template <typename S>
struct DenoiseCache {
  Mat<S> x_in;
  std::vector<BlockCache<S>> enc;
  CrossCache<S> cross;
  std::vector<BlockCache<S>> dec;
  Mat<S> zd;       // decoder output
  Mat<S> grid_in;  // conv input pixel grid
};

namespace detail {

template <typename S>
Mat<S> block_forward(const DenoiserParams<S>& p, const BlockSegs& b,
                     const Mat<S>& x, BlockCache<S>& cache) {
  cache.x = x;
  const Mat<S> xn1 =
      layer_norm_forward(x, p.map(b.ln1_g), p.map(b.ln1_b), cache.ln1);
  const Mat<S> a = attention_forward(
      xn1, p.cfg.heads, p.map(b.wq), p.map(b.bq), p.map(b.wk), p.map(b.bk),
      p.map(b.wv), p.map(b.bv), p.map(b.wo), p.map(b.bo), cache.att);
  cache.x2 = x + a;
  cache.xn2 = layer_norm_forward(cache.x2, p.map(b.ln2_g), p.map(b.ln2_b),
                                 cache.ln2);
  cache.u1 = linear_forward(cache.xn2, p.map(b.w1), p.map(b.b1));
  cache.g = gelu_forward(cache.u1);
  Mat<S> y = linear_forward(cache.g, p.map(b.w2), p.map(b.b2));
  y += cache.x2;
  return y;
}

template <typename S>
Mat<S> block_backward(const DenoiserParams<S>& p, DenoiserParams<S>& grad,
                      const BlockSegs& b, const Mat<S>& dy,
                      BlockCache<S>& cache) {
  const Mat<S> dg = linear_backward(dy, cache.g, p.map(b.w2), grad.map(b.w2),
                                    grad.map(b.b2));
  const Mat<S> du1 = gelu_backward(dg, cache.u1);
  const Mat<S> dxn2 = linear_backward(du1, cache.xn2, p.map(b.w1),
                                      grad.map(b.w1), grad.map(b.b1));
  Mat<S> dx2 = layer_norm_backward(dxn2, cache.ln2, p.map(b.ln2_g),
                                   grad.map(b.ln2_g), grad.map(b.ln2_b));
  dx2 += dy;  // residual around the feed-forward
  const Mat<S> dxn1 = attention_backward(
      dx2, p.cfg.heads, cache.att, p.map(b.wq), p.map(b.wk), p.map(b.wv),
      p.map(b.wo), grad.map(b.wq), grad.map(b.bq), grad.map(b.wk),
      grad.map(b.bk), grad.map(b.wv), grad.map(b.bv), grad.map(b.wo),
      grad.map(b.bo));
  Mat<S> dx = layer_norm_backward(dxn1, cache.ln1, p.map(b.ln1_g),
                                  grad.map(b.ln1_g), grad.map(b.ln1_b));
  dx += dx2;  // residual around the attention
  return dx;
}

}  // namespace detail

// Runs the denoiser. z_t and z_a are (L, C) patch sequences, embed is the
// (L, D) target positional embedding, t the integer timestep. Fills
// `cache` for a subsequent backward pass.
template <typename S>
Mat<S> denoise_forward(const DenoiserParams<S>& p, const Mat<S>& z_t,
                       const Mat<S>& z_a, const Mat<S>& embed, int t,
                       DenoiseCache<S>& cache) {
  require(p.initialized, ErrorKind::UntrainedModel,
          "denoise_forward: parameters are not initialized");
  const int L = p.cfg.seq_len(), C = p.cfg.patch_width(), D = p.cfg.hidden_dim;
  require(z_t.rows() == L && z_t.cols() == C, ErrorKind::ShapeMismatch,
          "denoise_forward: z_t shape mismatch");
  require(z_a.rows() == L && z_a.cols() == C, ErrorKind::ShapeMismatch,
          "denoise_forward: z_a shape mismatch");
  require(embed.rows() == L && embed.cols() == D, ErrorKind::ShapeMismatch,
          "denoise_forward: embedding shape mismatch");
  require(t >= 0, ErrorKind::InvalidRange, "denoise_forward: t must be >= 0");
  require(z_t.allFinite() && z_a.allFinite() && embed.allFinite(),
          ErrorKind::NonFiniteActivation,
          "denoise_forward: non-finite input");

  cache.x_in.resize(L, 2 * C);
  cache.x_in << z_t, z_a;
  Mat<S> z = linear_forward(cache.x_in, p.map(p.layout.in_w),
                            p.map(p.layout.in_b));
  if (p.cfg.anchor_pe) {
    const MatXd pe = sincos_embed(identity_grid(p.cfg.grid()), D);
    z += pe.cast<S>();
  }
  const RowVec<double> temb = timestep_embed(static_cast<double>(t), D);
  z.rowwise() += temb.cast<S>().row(0);

  cache.enc.resize(p.cfg.n_enc);
  for (int i = 0; i < p.cfg.n_enc; ++i)
    z = detail::block_forward(p, p.layout.enc[i], z, cache.enc[i]);

  Mat<S> zd = cross_attention_forward(embed, z, p.map(p.layout.cx_wq),
                                      p.map(p.layout.cx_wk),
                                      p.map(p.layout.cx_wv), cache.cross);

  cache.dec.resize(p.cfg.n_dec);
  for (int i = 0; i < p.cfg.n_dec; ++i)
    zd = detail::block_forward(p, p.layout.dec[i], zd, cache.dec[i]);
  cache.zd = zd;

  const Mat<S> u = linear_forward(zd, p.map(p.layout.out_w),
                                  p.map(p.layout.out_b));
  const PatchCodec codec = p.cfg.codec();
  cache.grid_in = patches_to_grid(u, codec);
  const Mat<S> grid_out =
      conv2d_forward(cache.grid_in, p.cfg.image_side, p.cfg.conv_kernel,
                     p.map(p.layout.conv_w), p.map(p.layout.conv_b));
  Mat<S> out = grid_to_patches(grid_out, codec);
  require(out.allFinite(), ErrorKind::NonFiniteActivation,
          "denoise_forward: non-finite output");
  return out;
}

// Convenience wrapper when no backward pass is needed.
template <typename S>
Mat<S> denoise(const DenoiserParams<S>& p, const Mat<S>& z_t,
               const Mat<S>& z_a, const Mat<S>& embed, int t) {
  DenoiseCache<S> cache;
  return denoise_forward(p, z_t, z_a, embed, t, cache);
}

// Backward pass for dLoss/dOutput `dout`; parameter gradients are
// accumulated into `grad` (same layout as the parameters).
template <typename S>
void denoise_backward(const DenoiserParams<S>& p, DenoiseCache<S>& cache,
                      const Mat<S>& dout, DenoiserParams<S>& grad) {
  const PatchCodec codec = p.cfg.codec();
  const Mat<S> dgrid_out = patches_to_grid(dout, codec);
  const Mat<S> dgrid_in =
      conv2d_backward(dgrid_out, cache.grid_in, p.cfg.image_side,
                      p.cfg.conv_kernel, p.map(p.layout.conv_w),
                      grad.map(p.layout.conv_w), grad.map(p.layout.conv_b));
  const Mat<S> du = grid_to_patches(dgrid_in, codec);
  Mat<S> dz = linear_backward(du, cache.zd, p.map(p.layout.out_w),
                              grad.map(p.layout.out_w),
                              grad.map(p.layout.out_b));
  for (int i = p.cfg.n_dec - 1; i >= 0; --i)
    dz = detail::block_backward(p, grad, p.layout.dec[i], dz, cache.dec[i]);
  Mat<S> dzg = cross_attention_backward(
      dz, cache.cross, p.map(p.layout.cx_wq), p.map(p.layout.cx_wk),
      p.map(p.layout.cx_wv), grad.map(p.layout.cx_wq),
      grad.map(p.layout.cx_wk), grad.map(p.layout.cx_wv));
  for (int i = p.cfg.n_enc - 1; i >= 0; --i)
    dzg = detail::block_backward(p, grad, p.layout.enc[i], dzg, cache.enc[i]);
  // Anchor/timestep embeddings are additive constants: gradient passes
  // straight through to the input projection.
  linear_backward(dzg, cache.x_in, p.map(p.layout.in_w),
                  grad.map(p.layout.in_w), grad.map(p.layout.in_b));
}

// -------------------------------------------------------------- training

template <typename S>
struct TrainSample {
  Mat<S> z_a;    // anchor latent
  Mat<S> z_b0;   // clean target latent
  Mat<S> embed;  // target positional embedding
  int t = 1;
  Mat<S> eps;    // forward-process noise
};

template <typename S>
struct LossGrad {
  double loss = 0.0;
  DenoiserParams<S> grad;
};

// Mean-squared denoising loss over a batch, averaged over batch x L x C,
// with the full parameter gradient.
template <typename S>
LossGrad<S> loss_and_grad(const DenoiserParams<S>& p,
                          const std::vector<TrainSample<S>>& batch,
                          const NoiseSchedule& sched) {
  require(!batch.empty(), ErrorKind::InvalidRange,
          "loss_and_grad: empty batch");
  LossGrad<S> out;
  out.grad = DenoiserParams<S>(p.cfg);
  const double denom = static_cast<double>(batch.size()) * p.cfg.seq_len() *
                       p.cfg.patch_width();
  for (const TrainSample<S>& s : batch) {
    const Mat<S> z_t = q_sample(s.z_b0, s.t, s.eps, sched);
    DenoiseCache<S> cache;
    const Mat<S> pred = denoise_forward(p, z_t, s.z_a, s.embed, s.t, cache);
    const Mat<S>& target =
        p.cfg.target == PredictionTarget::noise ? s.eps : s.z_b0;
    const Mat<S> diff = pred - target;
    out.loss += static_cast<double>(diff.squaredNorm());
    const Mat<S> dout = diff * static_cast<S>(2.0 / denom);
    denoise_backward(p, cache, dout, out.grad);
  }
  out.loss /= denom;
  return out;
}

}  // namespace outpaint
