#pragma once

// Checkpoint container: magic + version header, the training config as
// canonical text, float32 parameters, float64 optimizer moments, the
// iteration counter, Rng state, and a trailing CRC-32 over everything
// before it. Saving and re-loading reproduces the byte stream exactly, so
// resumed runs continue the original trajectory bit for bit. Multi-byte
// values are little-endian (asserted at compile time for this build).

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "outpaint/common.hpp"
#include "outpaint/trainer.hpp"

namespace outpaint {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace detail {

constexpr char kCkptMagic[8] = {'O', 'U', 'T', 'P', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCkptVersion = 1;

inline void put_bytes(std::string& out, const void* p, std::size_t n) {
  out.append(static_cast<const char*>(p), n);
}
template <typename T>
void put(std::string& out, T v) {
  put_bytes(out, &v, sizeof(T));
}

class ByteReader {
 public:
  ByteReader(const std::string& buf, std::size_t limit)
      : buf_(buf), limit_(limit) {}
  void read_bytes(void* p, std::size_t n) {
    require(pos_ + n <= limit_, ErrorKind::CorruptCheckpoint,
            "checkpoint: truncated");
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }
  template <typename T>
  T get() {
    T v;
    read_bytes(&v, sizeof(T));
    return v;
  }
  std::string get_string(std::size_t n) {
    require(pos_ + n <= limit_, ErrorKind::CorruptCheckpoint,
            "checkpoint: truncated");
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::string& buf_;
  std::size_t limit_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string encode_checkpoint(const TrainState& st) {
  using detail::put;
  std::string out;
  detail::put_bytes(out, detail::kCkptMagic, sizeof(detail::kCkptMagic));
  put<std::uint32_t>(out, detail::kCkptVersion);

  const std::string cfg_text = st.cfg.serialize();
  put<std::uint64_t>(out, cfg_text.size());
  out += cfg_text;

  put<std::uint64_t>(out, st.params.flat.size());
  detail::put_bytes(out, st.params.flat.data(),
                    st.params.flat.size() * sizeof(float));
  put<std::uint64_t>(out, st.m.size());
  detail::put_bytes(out, st.m.data(), st.m.size() * sizeof(double));
  detail::put_bytes(out, st.v.data(), st.v.size() * sizeof(double));

  put<std::uint64_t>(out, static_cast<std::uint64_t>(st.iter));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(st.crop_fallbacks));

  put<std::uint8_t>(out, st.pe_map ? 1 : 0);
  if (st.pe_map) {
    const LearnableMap& mp = *st.pe_map;
    auto put_mat = [&out](const MatXd& m) {
      put<std::uint64_t>(out, static_cast<std::uint64_t>(m.size()));
      detail::put_bytes(out, m.data(),
                        static_cast<std::size_t>(m.size()) * sizeof(double));
    };
    put<std::uint32_t>(out, static_cast<std::uint32_t>(mp.dim));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(mp.hidden));
    put_mat(mp.w1);
    put_mat(MatXd(mp.b1));
    put_mat(mp.w2);
    put_mat(MatXd(mp.b2));
  }

  const std::string rng_text = st.rng.save();
  put<std::uint64_t>(out, rng_text.size());
  out += rng_text;

  const auto crc = static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(out.data()),
              static_cast<uInt>(out.size())));
  put<std::uint32_t>(out, crc);
  return out;
}

inline TrainState decode_checkpoint(const std::string& buf) {
  require(buf.size() >= sizeof(detail::kCkptMagic) + 8,
          ErrorKind::CorruptCheckpoint, "checkpoint: file too small");
  require(std::memcmp(buf.data(), detail::kCkptMagic,
                      sizeof(detail::kCkptMagic)) == 0,
          ErrorKind::VersionMismatch, "checkpoint: bad magic");

  const std::size_t body = buf.size() - sizeof(std::uint32_t);
  std::uint32_t stored_crc;
  std::memcpy(&stored_crc, buf.data() + body, sizeof(stored_crc));
  const auto crc = static_cast<std::uint32_t>(::crc32(
      0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(body)));
  require(crc == stored_crc, ErrorKind::CorruptCheckpoint,
          "checkpoint: checksum mismatch");

  detail::ByteReader r(buf, body);
  char magic[8];
  r.read_bytes(magic, sizeof(magic));
  const auto version = r.get<std::uint32_t>();
  require(version == detail::kCkptVersion, ErrorKind::VersionMismatch,
          "checkpoint: unsupported version " + std::to_string(version));

  TrainState st;
  const auto cfg_len = r.get<std::uint64_t>();
  const std::string cfg_text = r.get_string(static_cast<std::size_t>(cfg_len));
  try {
    st.cfg = TrainConfig::parse(cfg_text);
  } catch (const Error& e) {
    fail(ErrorKind::CorruptCheckpoint,
         std::string("checkpoint: bad embedded config: ") + e.what());
  }
  st.sched = linear_schedule(st.cfg.timesteps, st.cfg.beta_start,
                             st.cfg.beta_end);
  st.params = DenoiserParams<float>(st.cfg.model);

  const auto n_params = r.get<std::uint64_t>();
  require(n_params == static_cast<std::uint64_t>(st.params.size()),
          ErrorKind::CorruptCheckpoint,
          "checkpoint: parameter count does not match config");
  r.read_bytes(st.params.flat.data(),
               static_cast<std::size_t>(n_params) * sizeof(float));
  st.params.initialized = true;

  const auto n_moments = r.get<std::uint64_t>();
  require(n_moments == n_params, ErrorKind::CorruptCheckpoint,
          "checkpoint: moment count does not match parameters");
  st.m.resize(static_cast<std::size_t>(n_moments));
  st.v.resize(static_cast<std::size_t>(n_moments));
  r.read_bytes(st.m.data(), st.m.size() * sizeof(double));
  r.read_bytes(st.v.data(), st.v.size() * sizeof(double));

  st.iter = static_cast<std::int64_t>(r.get<std::uint64_t>());
  st.crop_fallbacks = static_cast<std::int64_t>(r.get<std::uint64_t>());

  const auto has_map = r.get<std::uint8_t>();
  if (has_map) {
    const auto dim = static_cast<int>(r.get<std::uint32_t>());
    const auto hidden = static_cast<int>(r.get<std::uint32_t>());
    LearnableMap mp = LearnableMap::zeros(dim, hidden);
    auto get_into = [&r](double* dst, std::int64_t expect) {
      const auto n = r.get<std::uint64_t>();
      require(n == static_cast<std::uint64_t>(expect),
              ErrorKind::CorruptCheckpoint,
              "checkpoint: embedding map size mismatch");
      r.read_bytes(dst, static_cast<std::size_t>(n) * sizeof(double));
    };
    get_into(mp.w1.data(), mp.w1.size());
    get_into(mp.b1.data(), mp.b1.size());
    get_into(mp.w2.data(), mp.w2.size());
    get_into(mp.b2.data(), mp.b2.size());
    st.pe_map = std::move(mp);
  }

  const auto rng_len = r.get<std::uint64_t>();
  st.rng.load(r.get_string(static_cast<std::size_t>(rng_len)));
  require(r.pos() == body, ErrorKind::CorruptCheckpoint,
          "checkpoint: trailing bytes");
  return st;
}

inline void save_checkpoint(const TrainState& st, const std::string& path) {
  const std::string bytes = encode_checkpoint(st);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(f.good(), ErrorKind::IoFailure,
          "save_checkpoint: cannot open " + path);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  f.close();
  require(f.good(), ErrorKind::IoFailure,
          "save_checkpoint: write failed for " + path);
}

inline TrainState load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), ErrorKind::IoFailure,
          "load_checkpoint: cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace outpaint
