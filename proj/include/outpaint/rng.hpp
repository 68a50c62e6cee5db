#pragma once

// Deterministic random source. One seeded Rng drives an entire run; every
// draw goes through this wrapper so that replaying a seed replays the run
// bit for bit, including across checkpoint save/restore (the Box-Muller
// spare is part of the serialized state).

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

#include "outpaint/common.hpp"

namespace outpaint {

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return std::ldexp(static_cast<double>(engine_() >> 11), -53);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in the inclusive range [lo, hi], rejection-sampled so
  // the distribution is exact for any span.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    require(lo <= hi, ErrorKind::InvalidRange, "uniform_int: lo > hi");
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1u;
    if (span == 0) {  // full 64-bit range
      return static_cast<std::int64_t>(engine_());
    }
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % span);
  }

  // Standard normal via Box-Muller; generates pairs and caches the spare.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Independent child stream (used for per-component substreams whose draw
  // counts must not perturb the parent sequence).
  Rng fork() { return Rng(engine_()); }

  // Serialization round-trips the full state: engine, spare flag, spare
  // value (hex float so the round trip is exact).
  std::string save() const {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << engine_ << " " << (has_spare_ ? 1 : 0) << " ";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%a", spare_);
    os << buf;
    return os.str();
  }

  void load(const std::string& text) {
    std::istringstream is(text);
    is.imbue(std::locale::classic());
    std::mt19937_64 engine;
    int has_spare = 0;
    std::string spare_hex;
    is >> engine >> has_spare >> spare_hex;
    require(!is.fail(), ErrorKind::CorruptCheckpoint, "Rng::load: bad state text");
    engine_ = engine;
    has_spare_ = has_spare != 0;
    spare_ = spare_hex.empty() ? 0.0 : std::strtod(spare_hex.c_str(), nullptr);
  }

  bool operator==(const Rng& other) const {
    return engine_ == other.engine_ && has_spare_ == other.has_spare_ &&
           (has_spare_ ? spare_ == other.spare_ : true);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace outpaint
