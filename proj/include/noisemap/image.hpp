#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace noisemap {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(Rgb, Rgb) = default;
};

/// 8-bit RGB raster, row-major, row 0 at the top (north).
struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> data;  // width * height * 3

  RgbImage() = default;
  RgbImage(std::size_t w, std::size_t h, Rgb fill = {}) : width(w), height(h), data(w * h * 3) {
    for (std::size_t i = 0; i < w * h; ++i) set(i, fill);
  }

  Rgb at(std::size_t row, std::size_t col) const { return get(row * width + col); }
  void set(std::size_t row, std::size_t col, Rgb c) { set(row * width + col, c); }
  Rgb get(std::size_t pixel) const { return {data[3 * pixel], data[3 * pixel + 1], data[3 * pixel + 2]}; }
  void set(std::size_t pixel, Rgb c) {
    data[3 * pixel] = c.r;
    data[3 * pixel + 1] = c.g;
    data[3 * pixel + 2] = c.b;
  }
  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// 8-bit single-channel raster.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> data;
  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// Real-valued field, row-major, row 0 at the top.
struct Field {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> data;

  double at(std::size_t row, std::size_t col) const { return data[row * width + col]; }
};

/// Counter-clockwise quarter turn of the image content.
RgbImage rotate_ccw(const RgbImage& img);
RgbImage flip_horizontal(const RgbImage& img);

// PNG encoding is deterministic: fixed compression settings, no timestamps.
std::string encode_png(const RgbImage& img);
std::string encode_png(const GrayImage& img);
RgbImage decode_png(std::string_view bytes);
void write_png(const RgbImage& img, const std::filesystem::path& path);
void write_png(const GrayImage& img, const std::filesystem::path& path);
RgbImage read_png(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
/// Writes to a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace noisemap
