#pragma once

// Training state and the single-step update: draw a view pair per image,
// encode both views, pick a timestep and noise, take one AdamW step on the
// denoising loss. All randomness flows through the state's Rng in a fixed
// draw order, so a seed determines the whole run.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "outpaint/codec.hpp"
#include "outpaint/common.hpp"
#include "outpaint/geometry.hpp"
#include "outpaint/image.hpp"
#include "outpaint/model.hpp"
#include "outpaint/rng.hpp"
#include "outpaint/rpe.hpp"
#include "outpaint/schedule.hpp"

namespace outpaint {

enum class CropMode { continuous, discrete };

inline const char* to_string(CropMode m) {
  return m == CropMode::continuous ? "continuous" : "discrete";
}

struct TrainConfig {
  ModelConfig model;
  PeVariant pe_variant = PeVariant::sincos;

  int timesteps = 200;
  double beta_start = 1.0e-4;
  double beta_end = 2.0e-2;

  std::int64_t iterations = 5000;
  int batch_size = 4;
  double learning_rate = 2.0e-4;
  double weight_decay = 0.03;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.99;
  double adam_eps = 1.0e-8;

  ScaleRange anchor_scale{0.15, 0.5};
  ScaleRange target_scale{0.8, 1.0};
  ScaleRange aspect{0.75, 4.0 / 3.0};
  CropMode crop_mode = CropMode::continuous;
  std::vector<double> multiples{2.25};  // used when crop_mode == discrete

  int data_resolution = 64;
  std::uint64_t seed = 0;

  void validate() const {
    model.validate();
    require(timesteps >= 1, ErrorKind::InvalidRange,
            "TrainConfig: timesteps must be >= 1");
    require(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0,
            ErrorKind::InvalidRange, "TrainConfig: bad beta range");
    require(iterations >= 0, ErrorKind::InvalidRange,
            "TrainConfig: iterations must be >= 0");
    require(batch_size >= 1, ErrorKind::InvalidRange,
            "TrainConfig: batch_size must be >= 1");
    require(learning_rate > 0.0, ErrorKind::InvalidRange,
            "TrainConfig: learning_rate must be > 0");
    require(weight_decay >= 0.0, ErrorKind::InvalidRange,
            "TrainConfig: weight_decay must be >= 0");
    require(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 &&
                adam_beta2 < 1.0,
            ErrorKind::InvalidRange, "TrainConfig: betas must be in [0, 1)");
    require(adam_eps > 0.0, ErrorKind::InvalidRange,
            "TrainConfig: adam_eps must be > 0");
    validate_scale_range(anchor_scale, "anchor_scale");
    validate_scale_range(target_scale, "target_scale");
    validate_aspect_range(aspect);
    if (crop_mode == CropMode::discrete) {
      require(!multiples.empty(), ErrorKind::InvalidRange,
              "TrainConfig: discrete crop mode needs at least one multiple");
      for (double m : multiples)
        require(m >= 1.0, ErrorKind::InvalidRange,
                "TrainConfig: multiples must be >= 1");
    }
    require(data_resolution >= model.patch_side, ErrorKind::InvalidRange,
            "TrainConfig: data_resolution too small");
  }

  // Canonical text form, used verbatim inside checkpoints. Fixed key order;
  // doubles carry full precision.
  std::string serialize() const;
  static TrainConfig parse(const std::string& text);
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::string TrainConfig::serialize() const {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  auto kv = [&os](const char* k, const std::string& v) {
    os << k << "=" << v << "\n";
  };
  auto kd = [&](const char* k, double v) { kv(k, detail::fmt_double(v)); };
  auto ki = [&](const char* k, std::int64_t v) { kv(k, std::to_string(v)); };
  ki("image_side", model.image_side);
  ki("patch_side", model.patch_side);
  ki("channels", model.channels);
  ki("hidden_dim", model.hidden_dim);
  ki("n_enc", model.n_enc);
  ki("n_dec", model.n_dec);
  ki("heads", model.heads);
  ki("ff_mult", model.ff_mult);
  ki("conv_kernel", model.conv_kernel);
  ki("anchor_pe", model.anchor_pe ? 1 : 0);
  kv("prediction_target", to_string(model.target));
  kv("pe_variant", to_string(pe_variant));
  ki("timesteps", timesteps);
  kd("beta_start", beta_start);
  kd("beta_end", beta_end);
  ki("iterations", iterations);
  ki("batch_size", batch_size);
  kd("learning_rate", learning_rate);
  kd("weight_decay", weight_decay);
  kd("adam_beta1", adam_beta1);
  kd("adam_beta2", adam_beta2);
  kd("adam_eps", adam_eps);
  kd("anchor_scale_lo", anchor_scale.lo);
  kd("anchor_scale_hi", anchor_scale.hi);
  kd("target_scale_lo", target_scale.lo);
  kd("target_scale_hi", target_scale.hi);
  kd("aspect_lo", aspect.lo);
  kd("aspect_hi", aspect.hi);
  kv("crop_mode", to_string(crop_mode));
  {
    std::string joined;
    for (std::size_t i = 0; i < multiples.size(); ++i) {
      if (i) joined += ",";
      joined += detail::fmt_double(multiples[i]);
    }
    kv("multiples", joined);
  }
  ki("data_resolution", data_resolution);
  ki("seed", static_cast<std::int64_t>(seed));
  return os.str();
}

inline TrainConfig TrainConfig::parse(const std::string& text) {
  TrainConfig cfg;
  std::istringstream is(text);
  is.imbue(std::locale::classic());
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorKind::ConfigError,
            "TrainConfig::parse: malformed line: " + line);
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    auto as_int = [&] { return std::stoll(val); };
    auto as_double = [&] { return std::strtod(val.c_str(), nullptr); };
    if (key == "image_side") cfg.model.image_side = static_cast<int>(as_int());
    else if (key == "patch_side") cfg.model.patch_side = static_cast<int>(as_int());
    else if (key == "channels") cfg.model.channels = static_cast<int>(as_int());
    else if (key == "hidden_dim") cfg.model.hidden_dim = static_cast<int>(as_int());
    else if (key == "n_enc") cfg.model.n_enc = static_cast<int>(as_int());
    else if (key == "n_dec") cfg.model.n_dec = static_cast<int>(as_int());
    else if (key == "heads") cfg.model.heads = static_cast<int>(as_int());
    else if (key == "ff_mult") cfg.model.ff_mult = static_cast<int>(as_int());
    else if (key == "conv_kernel") cfg.model.conv_kernel = static_cast<int>(as_int());
    else if (key == "anchor_pe") cfg.model.anchor_pe = as_int() != 0;
    else if (key == "prediction_target")
      cfg.model.target = val == "x0" ? PredictionTarget::x0 : PredictionTarget::noise;
    else if (key == "pe_variant")
      cfg.pe_variant = val == "none"      ? PeVariant::none
                       : val == "learnable" ? PeVariant::learnable
                                            : PeVariant::sincos;
    else if (key == "timesteps") cfg.timesteps = static_cast<int>(as_int());
    else if (key == "beta_start") cfg.beta_start = as_double();
    else if (key == "beta_end") cfg.beta_end = as_double();
    else if (key == "iterations") cfg.iterations = as_int();
    else if (key == "batch_size") cfg.batch_size = static_cast<int>(as_int());
    else if (key == "learning_rate") cfg.learning_rate = as_double();
    else if (key == "weight_decay") cfg.weight_decay = as_double();
    else if (key == "adam_beta1") cfg.adam_beta1 = as_double();
    else if (key == "adam_beta2") cfg.adam_beta2 = as_double();
    else if (key == "adam_eps") cfg.adam_eps = as_double();
    else if (key == "anchor_scale_lo") cfg.anchor_scale.lo = as_double();
    else if (key == "anchor_scale_hi") cfg.anchor_scale.hi = as_double();
    else if (key == "target_scale_lo") cfg.target_scale.lo = as_double();
    else if (key == "target_scale_hi") cfg.target_scale.hi = as_double();
    else if (key == "aspect_lo") cfg.aspect.lo = as_double();
    else if (key == "aspect_hi") cfg.aspect.hi = as_double();
    else if (key == "crop_mode")
      cfg.crop_mode = val == "discrete" ? CropMode::discrete : CropMode::continuous;
    else if (key == "multiples") {
      cfg.multiples.clear();
      std::istringstream ms(val);
      std::string tok;
      while (std::getline(ms, tok, ','))
        if (!tok.empty()) cfg.multiples.push_back(std::strtod(tok.c_str(), nullptr));
    } else if (key == "data_resolution")
      cfg.data_resolution = static_cast<int>(as_int());
    else if (key == "seed")
      cfg.seed = static_cast<std::uint64_t>(as_int());
    else
      fail(ErrorKind::ConfigError, "TrainConfig::parse: unknown key: " + key);
  }
  cfg.validate();
  return cfg;
}

// ------------------------------------------------------------------ AdamW

// Decoupled weight decay: decay shrinks the parameter directly and never
// enters the moment estimates. Moments are kept in double; parameter
// arithmetic happens in double and is rounded once per step.
inline void adamw_step(std::vector<float>& param, const std::vector<float>& grad,
                       std::vector<double>& m, std::vector<double>& v,
                       std::int64_t step, double lr, double weight_decay,
                       double beta1, double beta2, double eps) {
  require(param.size() == grad.size() && param.size() == m.size() &&
              param.size() == v.size(),
          ErrorKind::ShapeMismatch, "adamw_step: buffer sizes differ");
  require(step >= 1, ErrorKind::InvalidRange, "adamw_step: step must be >= 1");
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = static_cast<double>(grad[i]);
    m[i] = beta1 * m[i] + (1.0 - beta1) * g;
    v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    const double p = static_cast<double>(param[i]);
    param[i] = static_cast<float>(p - lr * mhat / (std::sqrt(vhat) + eps) -
                                  lr * weight_decay * p);
  }
}

// ------------------------------------------------------------ train state

struct TrainState {
  TrainConfig cfg;
  NoiseSchedule sched;
  DenoiserParams<float> params;
  std::optional<LearnableMap> pe_map;  // fixed weights, drawn at init
  std::vector<double> m, v;
  std::int64_t iter = 0;
  std::int64_t crop_fallbacks = 0;
  Rng rng;
};

inline TrainState init_train_state(const TrainConfig& cfg) {
  cfg.validate();
  TrainState st;
  st.cfg = cfg;
  st.sched = linear_schedule(cfg.timesteps, cfg.beta_start, cfg.beta_end);
  st.rng = Rng(cfg.seed);
  st.params = DenoiserParams<float>(cfg.model);
  st.params.init_random(st.rng);
  if (cfg.pe_variant == PeVariant::learnable)
    st.pe_map = LearnableMap::random(cfg.model.hidden_dim,
                                     cfg.model.hidden_dim, st.rng);
  st.m.assign(static_cast<std::size_t>(st.params.size()), 0.0);
  st.v.assign(static_cast<std::size_t>(st.params.size()), 0.0);
  return st;
}

namespace detail {

// Discrete crop mode: centered square target covering the image, anchor as
// the centered sub-square for a multiple drawn from the configured list.
inline RegionPair discrete_regions(int image_h, int image_w, double multiple) {
  const int side = std::min(image_h, image_w);
  const RegionPair inner =
      mode_to_regions(MultipleMode{multiple, side});
  const int top = (image_h - side) / 2, left = (image_w - side) / 2;
  return RegionPair{
      CropRegion{top + inner.anchor.top, left + inner.anchor.left,
                 inner.anchor.height, inner.anchor.width},
      CropRegion{top, left, side, side}};
}

}  // namespace detail

// Builds one training sample from an image. Draw order per sample: crop
// geometry, timestep, noise entries (row-major).
inline TrainSample<float> make_train_sample(TrainState& st, const Image& img) {
  const ModelConfig& mc = st.cfg.model;
  RegionPair regions;
  if (st.cfg.crop_mode == CropMode::continuous) {
    const CropPair pair =
        sample_crop_pair(img.h, img.w, st.cfg.anchor_scale,
                         st.cfg.target_scale, st.cfg.aspect, st.rng);
    st.crop_fallbacks += (pair.anchor_fallback ? 1 : 0) +
                         (pair.target_fallback ? 1 : 0);
    regions = RegionPair{pair.anchor, pair.target};
  } else {
    const auto idx = st.rng.uniform_int(
        0, static_cast<std::int64_t>(st.cfg.multiples.size()) - 1);
    regions = detail::discrete_regions(img.h, img.w,
                                       st.cfg.multiples[static_cast<std::size_t>(idx)]);
  }

  const Image anchor_view =
      resize_bilinear(crop(img, regions.anchor), mc.image_side, mc.image_side);
  const Image target_view =
      resize_bilinear(crop(img, regions.target), mc.image_side, mc.image_side);

  const RelativeGrid grid =
      relative_grid(regions.anchor, regions.target, mc.grid(), mc.grid());
  const LearnableMap* map = st.pe_map ? &*st.pe_map : nullptr;
  const MatXd embed =
      embed_variant(grid, st.cfg.pe_variant, mc.hidden_dim, map);

  TrainSample<float> s;
  s.z_a = patchify<float>(anchor_view, mc.codec());
  s.z_b0 = patchify<float>(target_view, mc.codec());
  s.embed = embed.cast<float>();
  s.t = static_cast<int>(st.rng.uniform_int(1, st.cfg.timesteps));
  s.eps.resize(s.z_b0.rows(), s.z_b0.cols());
  for (Eigen::Index i = 0; i < s.eps.size(); ++i)
    s.eps.data()[i] = static_cast<float>(st.rng.normal());
  return s;
}

// One optimization step over a batch of images. Returns the batch loss.
inline double train_step(TrainState& st, const std::vector<const Image*>& batch) {
  require(!batch.empty(), ErrorKind::InvalidRange, "train_step: empty batch");
  std::vector<TrainSample<float>> samples;
  samples.reserve(batch.size());
  for (const Image* img : batch) samples.push_back(make_train_sample(st, *img));
  LossGrad<float> lg = loss_and_grad(st.params, samples, st.sched);
  adamw_step(st.params.flat, lg.grad.flat, st.m, st.v, st.iter + 1,
             st.cfg.learning_rate, st.cfg.weight_decay, st.cfg.adam_beta1,
             st.cfg.adam_beta2, st.cfg.adam_eps);
  ++st.iter;
  return lg.loss;
}

// Batch selection: indices drawn from the state Rng, one draw per slot.
inline std::vector<const Image*> draw_batch(TrainState& st,
                                            const std::vector<Image>& images) {
  require(!images.empty(), ErrorKind::EmptyDataset, "draw_batch: no images");
  std::vector<const Image*> batch(static_cast<std::size_t>(st.cfg.batch_size));
  for (auto& slot : batch)
    slot = &images[static_cast<std::size_t>(
        st.rng.uniform_int(0, static_cast<std::int64_t>(images.size()) - 1))];
  return batch;
}

}  // namespace outpaint
