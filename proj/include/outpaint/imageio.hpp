#pragma once

// Raster file I/O: PNG (via libpng's simplified API) and binary PPM (P6).
// Files carry 8-bit samples; in-memory images are [-1, 1] floats, converted
// at the boundary.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <png.h>

#include "outpaint/common.hpp"
#include "outpaint/image.hpp"

namespace outpaint {

struct RawImage {
  int h = 0;
  int w = 0;
  int c = 0;
  std::vector<std::uint8_t> data;
};

inline Image to_unit(const RawImage& raw) {
  Image img(raw.h, raw.w, raw.c);
  for (std::size_t i = 0; i < raw.data.size(); ++i)
    img.data[i] = u8_to_unit(raw.data[i]);
  return img;
}

inline RawImage from_unit(const Image& img) {
  RawImage raw{img.h, img.w, img.c, {}};
  raw.data.resize(img.data.size());
  for (std::size_t i = 0; i < img.data.size(); ++i)
    raw.data[i] = unit_to_u8(img.data[i]);
  return raw;
}

namespace detail {

inline std::string lower_ext(const std::string& path) {
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return "";
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return std::tolower(ch); });
  return ext;
}

}  // namespace detail

// ------------------------------------------------------------------- PNG

// Reads any PNG and converts to `channels` (1 = gray, 3 = RGB) 8-bit.
inline RawImage read_png(const std::string& path, int channels = 3) {
  require(channels == 1 || channels == 3, ErrorKind::InvalidRange,
          "read_png: channels must be 1 or 3");
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str()))
    fail(ErrorKind::DecodeFailure,
         "read_png: " + path + ": " + png.message);
  png.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  RawImage raw;
  raw.h = static_cast<int>(png.height);
  raw.w = static_cast<int>(png.width);
  raw.c = channels;
  raw.data.resize(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, raw.data.data(), 0, nullptr)) {
    png_image_free(&png);
    fail(ErrorKind::DecodeFailure,
         "read_png: " + path + ": " + png.message);
  }
  return raw;
}

inline void write_png(const std::string& path, const RawImage& raw) {
  require(raw.c == 1 || raw.c == 3, ErrorKind::InvalidRange,
          "write_png: channels must be 1 or 3");
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(raw.w);
  png.height = static_cast<png_uint_32>(raw.h);
  png.format = raw.c == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png, path.c_str(), 0, raw.data.data(), 0,
                               nullptr))
    fail(ErrorKind::IoFailure, "write_png: " + path + ": " + png.message);
}

// ------------------------------------------------------------------- PPM

inline RawImage read_ppm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), ErrorKind::IoFailure, "read_ppm: cannot open " + path);
  auto next_token = [&]() -> std::string {
    std::string tok;
    int ch;
    while ((ch = f.get()) != EOF) {
      if (ch == '#') {  // comment to end of line
        while ((ch = f.get()) != EOF && ch != '\n') {}
        continue;
      }
      if (std::isspace(ch)) {
        if (!tok.empty()) break;
        continue;
      }
      tok.push_back(static_cast<char>(ch));
    }
    return tok;
  };
  require(next_token() == "P6", ErrorKind::DecodeFailure,
          "read_ppm: " + path + ": not a P6 file");
  RawImage raw;
  try {
    raw.w = std::stoi(next_token());
    raw.h = std::stoi(next_token());
    const int maxval = std::stoi(next_token());
    require(maxval == 255, ErrorKind::DecodeFailure,
            "read_ppm: " + path + ": only maxval 255 is supported");
  } catch (const std::logic_error&) {
    fail(ErrorKind::DecodeFailure, "read_ppm: " + path + ": bad header");
  }
  require(raw.w > 0 && raw.h > 0, ErrorKind::DecodeFailure,
          "read_ppm: " + path + ": bad dimensions");
  raw.c = 3;
  raw.data.resize(static_cast<std::size_t>(raw.h) * raw.w * 3);
  f.read(reinterpret_cast<char*>(raw.data.data()),
         static_cast<std::streamsize>(raw.data.size()));
  require(f.gcount() == static_cast<std::streamsize>(raw.data.size()),
          ErrorKind::DecodeFailure, "read_ppm: " + path + ": truncated data");
  return raw;
}

inline void write_ppm(const std::string& path, const RawImage& raw) {
  require(raw.c == 3, ErrorKind::InvalidRange,
          "write_ppm: P6 requires 3 channels");
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(f.good(), ErrorKind::IoFailure, "write_ppm: cannot open " + path);
  f << "P6\n" << raw.w << " " << raw.h << "\n255\n";
  f.write(reinterpret_cast<const char*>(raw.data.data()),
          static_cast<std::streamsize>(raw.data.size()));
  require(f.good(), ErrorKind::IoFailure, "write_ppm: write failed " + path);
}

// ------------------------------------------------------- format dispatch

inline bool supported_image_ext(const std::string& path) {
  const std::string ext = detail::lower_ext(path);
  return ext == "png" || ext == "ppm";
}

inline RawImage read_image(const std::string& path, int channels = 3) {
  const std::string ext = detail::lower_ext(path);
  if (ext == "png") return read_png(path, channels);
  if (ext == "ppm") {
    RawImage raw = read_ppm(path);
    require(channels == 3, ErrorKind::InvalidRange,
            "read_image: PPM provides 3 channels");
    return raw;
  }
  fail(ErrorKind::DecodeFailure,
       "read_image: unsupported extension for " + path);
}

inline void write_image(const std::string& path, const RawImage& raw) {
  const std::string ext = detail::lower_ext(path);
  if (ext == "png") return write_png(path, raw);
  if (ext == "ppm") return write_ppm(path, raw);
  fail(ErrorKind::IoFailure, "write_image: unsupported extension for " + path);
}

}  // namespace outpaint
