#pragma once

// Run configuration: one flat key=value schema covering training, sampling
// and evaluation, parsed from a text file ('#' comments) with flag
// overrides applied on top. Unknown keys are hard errors; the effective
// config can be serialized back out in canonical order.

#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "outpaint/common.hpp"
#include "outpaint/geometry.hpp"
#include "outpaint/sampler.hpp"
#include "outpaint/trainer.hpp"

namespace outpaint {

struct RunConfig {
  TrainConfig train;

  // Sampling.
  double multiple = 2.25;
  int output_side = 192;
  bool explicit_regions = false;
  CropRegion anchor_region{0, 0, 0, 0};
  CropRegion target_region{0, 0, 0, 0};
  std::string trajectory = "ddim";
  int ddim_steps = 20;
  bool copy_input = false;
  int sample_count = 1;
  std::uint64_t sample_seed = 0;

  // Evaluation. Images live in [-1, 1], so the PSNR peak is 2 by default.
  double psnr_max = 2.0;
  double psnr_cutoff = 1000.0;
  int eval_count = 16;

  // Paths.
  std::string data = "synthetic:512";
  std::string input;
  std::string checkpoint;
  std::string out_dir;

  OutpaintMode mode() const {
    if (explicit_regions) return ExplicitMode{anchor_region, target_region};
    return MultipleMode{multiple, output_side};
  }

  Trajectory trajectory_enum() const {
    if (trajectory == "ddpm") return Trajectory::ddpm;
    if (trajectory == "ddim") return Trajectory::ddim;
    fail(ErrorKind::ConfigError,
         "trajectory must be 'ddpm' or 'ddim', got '" + trajectory + "'");
  }

  SampleConfig sample_config() const {
    SampleConfig cfg;
    cfg.mode = mode();
    cfg.trajectory = trajectory_enum();
    cfg.ddim_steps = ddim_steps;
    cfg.copy_input = copy_input;
    return cfg;
  }

  void validate() const {
    train.validate();
    trajectory_enum();
    require(ddim_steps >= 1, ErrorKind::ConfigError,
            "ddim_steps must be >= 1");
    require(sample_count >= 1, ErrorKind::ConfigError,
            "sample_count must be >= 1");
    require(eval_count >= 1, ErrorKind::ConfigError, "eval_count must be >= 1");
    require(psnr_max > 0.0, ErrorKind::ConfigError, "psnr_max must be > 0");
    require(psnr_cutoff > 0.0, ErrorKind::ConfigError,
            "psnr_cutoff must be > 0");
    if (!explicit_regions) {
      require(multiple >= 1.0, ErrorKind::ConfigError, "multiple must be >= 1");
      require(output_side >= 2, ErrorKind::ConfigError,
              "output_side must be >= 2");
    }
  }
};

namespace detail {

struct ConfigField {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::int64_t parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const std::int64_t x = std::stoll(v, &used);
    require(used == v.size(), ErrorKind::ConfigError, "");
    return x;
  } catch (...) {
    fail(ErrorKind::ConfigError, key + ": expected an integer, got '" + v + "'");
  }
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    require(used == v.size(), ErrorKind::ConfigError, "");
    return x;
  } catch (...) {
    fail(ErrorKind::ConfigError, key + ": expected a number, got '" + v + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on") return true;
  if (v == "0" || v == "false" || v == "off") return false;
  fail(ErrorKind::ConfigError, key + ": expected a boolean, got '" + v + "'");
}

inline CropRegion parse_region(const std::string& key, const std::string& v) {
  std::istringstream is(v);
  std::string tok;
  std::vector<int> parts;
  while (std::getline(is, tok, ','))
    parts.push_back(static_cast<int>(parse_int(key, trim(tok))));
  require(parts.size() == 4, ErrorKind::ConfigError,
          key + ": expected 'top,left,height,width', got '" + v + "'");
  return CropRegion{parts[0], parts[1], parts[2], parts[3]};
}

inline std::string region_to_string(const CropRegion& r) {
  std::ostringstream os;
  os << r.top << "," << r.left << "," << r.height << "," << r.width;
  return os.str();
}

// The schema: every recognized key with its setter and canonical printer.
inline const std::vector<ConfigField>& config_schema() {
  static const std::vector<ConfigField> schema = [] {
    std::vector<ConfigField> f;
    auto add = [&f](const std::string& key,
                    std::function<void(RunConfig&, const std::string&)> set,
                    std::function<std::string(const RunConfig&)> get) {
      f.push_back(ConfigField{key, std::move(set), std::move(get)});
    };
    auto add_int = [&](const std::string& key, auto member) {
      add(key,
          [key, member](RunConfig& c, const std::string& v) {
            c.*member = static_cast<std::remove_reference_t<decltype(c.*member)>>(
                parse_int(key, v));
          },
          [member](const RunConfig& c) { return std::to_string(c.*member); });
    };
    auto add_dbl = [&](const std::string& key, auto member) {
      add(key,
          [key, member](RunConfig& c, const std::string& v) {
            c.*member = parse_double(key, v);
          },
          [member](const RunConfig& c) { return fmt_double(c.*member); });
    };
    auto add_str = [&](const std::string& key, auto member) {
      add(key,
          [member](RunConfig& c, const std::string& v) { c.*member = v; },
          [member](const RunConfig& c) { return c.*member; });
    };
    auto add_bool = [&](const std::string& key, auto member) {
      add(key,
          [key, member](RunConfig& c, const std::string& v) {
            c.*member = parse_bool(key, v);
          },
          [member](const RunConfig& c) {
            return std::string(c.*member ? "1" : "0");
          });
    };
    // Model.
    add("image_side",
        [](RunConfig& c, const std::string& v) {
          c.train.model.image_side = static_cast<int>(parse_int("image_side", v));
        },
        [](const RunConfig& c) { return std::to_string(c.train.model.image_side); });
    add("patch_side",
        [](RunConfig& c, const std::string& v) {
          c.train.model.patch_side = static_cast<int>(parse_int("patch_side", v));
        },
        [](const RunConfig& c) { return std::to_string(c.train.model.patch_side); });
    add("channels",
        [](RunConfig& c, const std::string& v) {
          c.train.model.channels = static_cast<int>(parse_int("channels", v));
        },
        [](const RunConfig& c) { return std::to_string(c.train.model.channels); });
    add("hidden_dim",
        [](RunConfig& c, const std::string& v) {
          c.train.model.hidden_dim = static_cast<int>(parse_int("hidden_dim", v));
        },
        [](const RunConfig& c) { return std::to_string(c.train.model.hidden_dim); });
    add("n_enc",
        [](RunConfig& c, const std::string& v) {
          c.train.model.n_enc = static_cast<int>(parse_int("n_enc", v));
        },
        [](const RunConfig& c) { return std::to_string(c.train.model.n_enc); });
    add("n_dec",
        [](RunConfig& c, const std::string& v) {
          c.train.model.n_dec = static_cast<int>(parse_int("n_dec", v));
        },
        [](const RunConfig& c) { return std::to_string(c.train.model.n_dec); });
    add("heads",
        [](RunConfig& c, const std::string& v) {
          c.train.model.heads = static_cast<int>(parse_int("heads", v));
        },
        [](const RunConfig& c) { return std::to_string(c.train.model.heads); });
    add("ff_mult",
        [](RunConfig& c, const std::string& v) {
          c.train.model.ff_mult = static_cast<int>(parse_int("ff_mult", v));
        },
        [](const RunConfig& c) { return std::to_string(c.train.model.ff_mult); });
    add("conv_kernel",
        [](RunConfig& c, const std::string& v) {
          c.train.model.conv_kernel = static_cast<int>(parse_int("conv_kernel", v));
        },
        [](const RunConfig& c) { return std::to_string(c.train.model.conv_kernel); });
    add("anchor_pe",
        [](RunConfig& c, const std::string& v) {
          c.train.model.anchor_pe = parse_bool("anchor_pe", v);
        },
        [](const RunConfig& c) {
          return std::string(c.train.model.anchor_pe ? "1" : "0");
        });
    add("prediction_target",
        [](RunConfig& c, const std::string& v) {
          if (v == "noise") c.train.model.target = PredictionTarget::noise;
          else if (v == "x0") c.train.model.target = PredictionTarget::x0;
          else fail(ErrorKind::ConfigError,
                    "prediction_target must be 'noise' or 'x0'");
        },
        [](const RunConfig& c) {
          return std::string(to_string(c.train.model.target));
        });
    add("pe_variant",
        [](RunConfig& c, const std::string& v) {
          if (v == "none") c.train.pe_variant = PeVariant::none;
          else if (v == "learnable") c.train.pe_variant = PeVariant::learnable;
          else if (v == "sincos") c.train.pe_variant = PeVariant::sincos;
          else fail(ErrorKind::ConfigError,
                    "pe_variant must be none, learnable or sincos");
        },
        [](const RunConfig& c) {
          return std::string(to_string(c.train.pe_variant));
        });
    // Schedule + optimization.
    add("timesteps",
        [](RunConfig& c, const std::string& v) {
          c.train.timesteps = static_cast<int>(parse_int("timesteps", v));
        },
        [](const RunConfig& c) { return std::to_string(c.train.timesteps); });
    add("beta_start",
        [](RunConfig& c, const std::string& v) {
          c.train.beta_start = parse_double("beta_start", v);
        },
        [](const RunConfig& c) { return fmt_double(c.train.beta_start); });
    add("beta_end",
        [](RunConfig& c, const std::string& v) {
          c.train.beta_end = parse_double("beta_end", v);
        },
        [](const RunConfig& c) { return fmt_double(c.train.beta_end); });
    add("iterations",
        [](RunConfig& c, const std::string& v) {
          c.train.iterations = parse_int("iterations", v);
        },
        [](const RunConfig& c) { return std::to_string(c.train.iterations); });
    add("batch_size",
        [](RunConfig& c, const std::string& v) {
          c.train.batch_size = static_cast<int>(parse_int("batch_size", v));
        },
        [](const RunConfig& c) { return std::to_string(c.train.batch_size); });
    add("learning_rate",
        [](RunConfig& c, const std::string& v) {
          c.train.learning_rate = parse_double("learning_rate", v);
        },
        [](const RunConfig& c) { return fmt_double(c.train.learning_rate); });
    add("weight_decay",
        [](RunConfig& c, const std::string& v) {
          c.train.weight_decay = parse_double("weight_decay", v);
        },
        [](const RunConfig& c) { return fmt_double(c.train.weight_decay); });
    add("adam_beta1",
        [](RunConfig& c, const std::string& v) {
          c.train.adam_beta1 = parse_double("adam_beta1", v);
        },
        [](const RunConfig& c) { return fmt_double(c.train.adam_beta1); });
    add("adam_beta2",
        [](RunConfig& c, const std::string& v) {
          c.train.adam_beta2 = parse_double("adam_beta2", v);
        },
        [](const RunConfig& c) { return fmt_double(c.train.adam_beta2); });
    add("adam_eps",
        [](RunConfig& c, const std::string& v) {
          c.train.adam_eps = parse_double("adam_eps", v);
        },
        [](const RunConfig& c) { return fmt_double(c.train.adam_eps); });
    // Crop geometry.
    add("anchor_scale_lo",
        [](RunConfig& c, const std::string& v) {
          c.train.anchor_scale.lo = parse_double("anchor_scale_lo", v);
        },
        [](const RunConfig& c) { return fmt_double(c.train.anchor_scale.lo); });
    add("anchor_scale_hi",
        [](RunConfig& c, const std::string& v) {
          c.train.anchor_scale.hi = parse_double("anchor_scale_hi", v);
        },
        [](const RunConfig& c) { return fmt_double(c.train.anchor_scale.hi); });
    add("target_scale_lo",
        [](RunConfig& c, const std::string& v) {
          c.train.target_scale.lo = parse_double("target_scale_lo", v);
        },
        [](const RunConfig& c) { return fmt_double(c.train.target_scale.lo); });
    add("target_scale_hi",
        [](RunConfig& c, const std::string& v) {
          c.train.target_scale.hi = parse_double("target_scale_hi", v);
        },
        [](const RunConfig& c) { return fmt_double(c.train.target_scale.hi); });
    add("aspect_lo",
        [](RunConfig& c, const std::string& v) {
          c.train.aspect.lo = parse_double("aspect_lo", v);
        },
        [](const RunConfig& c) { return fmt_double(c.train.aspect.lo); });
    add("aspect_hi",
        [](RunConfig& c, const std::string& v) {
          c.train.aspect.hi = parse_double("aspect_hi", v);
        },
        [](const RunConfig& c) { return fmt_double(c.train.aspect.hi); });
    add("crop_mode",
        [](RunConfig& c, const std::string& v) {
          if (v == "continuous") c.train.crop_mode = CropMode::continuous;
          else if (v == "discrete") c.train.crop_mode = CropMode::discrete;
          else fail(ErrorKind::ConfigError,
                    "crop_mode must be continuous or discrete");
        },
        [](const RunConfig& c) {
          return std::string(to_string(c.train.crop_mode));
        });
    add("multiples",
        [](RunConfig& c, const std::string& v) {
          c.train.multiples.clear();
          std::istringstream is(v);
          std::string tok;
          while (std::getline(is, tok, ','))
            c.train.multiples.push_back(parse_double("multiples", trim(tok)));
        },
        [](const RunConfig& c) {
          std::string s;
          for (std::size_t i = 0; i < c.train.multiples.size(); ++i) {
            if (i) s += ",";
            s += fmt_double(c.train.multiples[i]);
          }
          return s;
        });
    add("data_resolution",
        [](RunConfig& c, const std::string& v) {
          c.train.data_resolution =
              static_cast<int>(parse_int("data_resolution", v));
        },
        [](const RunConfig& c) {
          return std::to_string(c.train.data_resolution);
        });
    add("seed",
        [](RunConfig& c, const std::string& v) {
          c.train.seed = static_cast<std::uint64_t>(parse_int("seed", v));
        },
        [](const RunConfig& c) {
          return std::to_string(c.train.seed);
        });
    // Sampling.
    add_dbl("multiple", &RunConfig::multiple);
    add_int("output_side", &RunConfig::output_side);
    add_bool("explicit_regions", &RunConfig::explicit_regions);
    add("anchor_region",
        [](RunConfig& c, const std::string& v) {
          c.anchor_region = parse_region("anchor_region", v);
        },
        [](const RunConfig& c) { return region_to_string(c.anchor_region); });
    add("target_region",
        [](RunConfig& c, const std::string& v) {
          c.target_region = parse_region("target_region", v);
        },
        [](const RunConfig& c) { return region_to_string(c.target_region); });
    add_str("trajectory", &RunConfig::trajectory);
    add_int("ddim_steps", &RunConfig::ddim_steps);
    add_bool("copy_input", &RunConfig::copy_input);
    add_int("sample_count", &RunConfig::sample_count);
    add("sample_seed",
        [](RunConfig& c, const std::string& v) {
          c.sample_seed = static_cast<std::uint64_t>(parse_int("sample_seed", v));
        },
        [](const RunConfig& c) { return std::to_string(c.sample_seed); });
    // Evaluation.
    add_dbl("psnr_max", &RunConfig::psnr_max);
    add_dbl("psnr_cutoff", &RunConfig::psnr_cutoff);
    add_int("eval_count", &RunConfig::eval_count);
    // Paths.
    add_str("data", &RunConfig::data);
    add_str("input", &RunConfig::input);
    add_str("checkpoint", &RunConfig::checkpoint);
    add_str("out_dir", &RunConfig::out_dir);
    return f;
  }();
  return schema;
}

}  // namespace detail

inline void apply_config_entry(RunConfig& cfg, const std::string& key,
                               const std::string& value) {
  for (const auto& field : detail::config_schema()) {
    if (field.key == key) {
      field.set(cfg, value);
      return;
    }
  }
  fail(ErrorKind::ConfigError, "unknown config key: " + key);
}

inline void parse_config_text(RunConfig& cfg, const std::string& text,
                              const std::string& origin) {
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorKind::ConfigError,
            origin + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    require(!key.empty(), ErrorKind::ConfigError,
            origin + ":" + std::to_string(lineno) + ": empty key");
    apply_config_entry(cfg, key, value);
  }
}

inline void parse_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream f(path);
  require(f.good(), ErrorKind::IoFailure, "cannot open config file " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  parse_config_text(cfg, buf.str(), path);
}

// Canonical echo of every key in schema order.
inline std::string serialize_run_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& field : detail::config_schema())
    out += field.key + " = " + field.get(cfg) + "\n";
  return out;
}

}  // namespace outpaint
