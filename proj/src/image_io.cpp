// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
#include "dgnr/image.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace dgnr {

namespace {

uint8_t quantize8(float v) {
  float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<uint8_t>(std::lround(c * 255.0f));
}

std::string lower_ext(const std::filesystem::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

void write_ppm(const std::filesystem::path& path, const Image& img) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("write_ppm: cannot open " + path.string());
  os << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<uint8_t> row(static_cast<size_t>(img.width) * 3);
  for (Index y = 0; y < img.height; ++y) {
    for (Index x = 0; x < img.width; ++x)
      for (Index c = 0; c < 3; ++c) row[x * 3 + c] = quantize8(img.at(c, y, x));
    os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!os) throw std::runtime_error("write_ppm: write failed " + path.string());
}

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_ppm: cannot open " + path.string());
  std::string magic;
  is >> magic;
  if (magic != "P6") throw std::runtime_error("read_ppm: not a P6 file: " + path.string());
  auto next_int = [&is, &path]() {
    // Skips whitespace and '#' comments.
    for (;;) {
      int ch = is.peek();
      if (ch == '#') {
        std::string line;
        std::getline(is, line);
      } else if (std::isspace(ch)) {
        is.get();
      } else {
        break;
      }
    }
    long v;
    if (!(is >> v)) throw std::runtime_error("read_ppm: bad header in " + path.string());
    return v;
  };
  const long w = next_int(), h = next_int(), maxv = next_int();
  if (w <= 0 || h <= 0 || maxv != 255)
    throw std::runtime_error("read_ppm: unsupported header in " + path.string());
  is.get();  // single whitespace after maxval
  Image img(w, h);
  std::vector<uint8_t> row(static_cast<size_t>(w) * 3);
  for (long y = 0; y < h; ++y) {
    is.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    if (!is) throw std::runtime_error("read_ppm: truncated pixel data in " + path.string());
    for (long x = 0; x < w; ++x)
      for (long c = 0; c < 3; ++c) img.at(c, y, x) = static_cast<float>(row[x * 3 + c]) / 255.0f;
  }
  return img;
}

struct PngFile {
  FILE* f = nullptr;
  ~PngFile() {
    if (f) std::fclose(f);
  }
};

void write_png_rgb8(const std::filesystem::path& path, const Image& img) {
  PngFile file;
  file.f = std::fopen(path.string().c_str(), "wb");
  if (!file.f) throw std::runtime_error("write_png: cannot open " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("write_png: libpng failure for " + path.string());
  }
  png_init_io(png, file.f);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<uint8_t> row(static_cast<size_t>(img.width) * 3);
  for (Index y = 0; y < img.height; ++y) {
    for (Index x = 0; x < img.width; ++x)
      for (Index c = 0; c < 3; ++c) row[x * 3 + c] = quantize8(img.at(c, y, x));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image read_png(const std::filesystem::path& path) {
  PngFile file;
  file.f = std::fopen(path.string().c_str(), "rb");
  if (!file.f) throw std::runtime_error("read_png: cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("read_png: libpng failure for " + path.string());
  }
  png_init_io(png, file.f);
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  if (png_get_channels(png, info) != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("read_png: expected 3 channels after expansion: " + path.string());
  }
  Image img(w, h);
  std::vector<uint8_t> row(static_cast<size_t>(w) * 3);
  for (png_uint_32 y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (png_uint_32 x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = static_cast<float>(row[x * 3 + c]) / 255.0f;
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

}  // namespace

void write_image(const std::filesystem::path& path, const Image& img) {
  const std::string ext = lower_ext(path);
  if (ext == ".ppm")
    write_ppm(path, img);
  else if (ext == ".png")
    write_png_rgb8(path, img);
  else
    throw std::invalid_argument("write_image: unsupported extension " + ext);
}

Image read_image(const std::filesystem::path& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".ppm") return read_ppm(path);
  if (ext == ".png") return read_png(path);
  throw std::invalid_argument("read_image: unsupported extension " + ext);
}

void write_png_gray16(const std::filesystem::path& path, const DepthImage& img, float scale) {
  PngFile file;
  file.f = std::fopen(path.string().c_str(), "wb");
  if (!file.f) throw std::runtime_error("write_png_gray16: cannot open " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("write_png_gray16: libpng failure for " + path.string());
  }
  png_init_io(png, file.f);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<uint8_t> row(static_cast<size_t>(img.width) * 2);
  for (Index y = 0; y < img.height; ++y) {
    for (Index x = 0; x < img.width; ++x) {
      float v = std::clamp(img.at(y, x) / scale, 0.0f, 1.0f);
      auto q = static_cast<uint16_t>(std::lround(v * 65535.0f));
      row[x * 2] = static_cast<uint8_t>(q >> 8);  // PNG is big-endian
      row[x * 2 + 1] = static_cast<uint8_t>(q & 0xff);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_depth_raw(const std::filesystem::path& path, const DepthImage& img) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("write_depth_raw: cannot open " + path.string());
  const char magic[4] = {'D', 'P', 'T', 'H'};
  const uint32_t w = static_cast<uint32_t>(img.width), h = static_cast<uint32_t>(img.height);
  const uint32_t reserved = 0;
  os.write(magic, 4);
  os.write(reinterpret_cast<const char*>(&w), 4);
  os.write(reinterpret_cast<const char*>(&h), 4);
  os.write(reinterpret_cast<const char*>(&reserved), 4);
  os.write(reinterpret_cast<const char*>(img.values.ptr()),
           static_cast<std::streamsize>(img.values.size() * sizeof(float)));
  if (!os) throw std::runtime_error("write_depth_raw: write failed " + path.string());
}

DepthImage read_depth_raw(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_depth_raw: cannot open " + path.string());
  char magic[4];
  uint32_t w, h, reserved;
  is.read(magic, 4);
  is.read(reinterpret_cast<char*>(&w), 4);
  is.read(reinterpret_cast<char*>(&h), 4);
  is.read(reinterpret_cast<char*>(&reserved), 4);
  if (!is || std::memcmp(magic, "DPTH", 4) != 0)
    throw std::runtime_error("read_depth_raw: bad header in " + path.string());
  DepthImage img(w, h);
  is.read(reinterpret_cast<char*>(img.values.ptr()),
          static_cast<std::streamsize>(img.values.size() * sizeof(float)));
  if (!is) throw std::runtime_error("read_depth_raw: truncated data in " + path.string());
  return img;
}

}  // namespace dgnr
