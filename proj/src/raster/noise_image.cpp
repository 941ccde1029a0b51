#include <algorithm>
#include <cmath>

#include "noisemap/errors.hpp"
#include "noisemap/raster.hpp"

namespace noisemap {

namespace {

/// Source index and integer weights (summing to `den`) for one output pixel.
struct Tap {
  std::size_t i0, i1;
  std::int64_t w0, w1;
};

std::vector<Tap> bilinear_taps(std::size_t n, std::size_t px) {
  // Output pixel j samples grid coordinate ((2j + 1) n - px) / (2 px).
  const auto den = static_cast<std::int64_t>(2 * px);
  const auto last = static_cast<std::int64_t>(n - 1) * den;
  std::vector<Tap> taps(px);
  for (std::size_t j = 0; j < px; ++j) {
    std::int64_t a = static_cast<std::int64_t>((2 * j + 1) * n) - static_cast<std::int64_t>(px);
    a = std::clamp<std::int64_t>(a, 0, last);
    const auto i0 = static_cast<std::size_t>(a / den);
    const std::int64_t f = a - static_cast<std::int64_t>(i0) * den;
    taps[j] = {i0, std::min(i0 + 1, n - 1), den - f, f};
  }
  return taps;
}

}  // namespace

RgbImage encode_noise(const NoiseGrid& grid, std::size_t px) {
  if (!is_supported_image_size(px)) throw InputError("unsupported image size " + std::to_string(px));
  if (grid.rows == 0 || grid.cols == 0) throw DomainError("encode_noise: empty grid");
  for (double v : grid.values) {
    if (!std::isfinite(v)) throw DomainError("encode_noise: grid contains non-finite values (fill masked cells first)");
  }
  const auto ty = bilinear_taps(grid.rows, px);
  const auto tx = bilinear_taps(grid.cols, px);
  const double norm = static_cast<double>(4 * px * px);
  // Image rows run north to south; grid rows south to north.
  const auto north_up = [&](std::size_t i, std::size_t j) { return grid.at(grid.rows - 1 - i, j); };

  RgbImage img(px, px);
  for (std::size_t r = 0; r < px; ++r) {
    const Tap& y = ty[r];
    for (std::size_t c = 0; c < px; ++c) {
      const Tap& x = tx[c];
      // Sorted summation keeps the result independent of axis order, so the
      // encoder commutes exactly with quarter turns.
      std::array<double, 4> terms = {
          static_cast<double>(y.w0 * x.w0) * north_up(y.i0, x.i0),
          static_cast<double>(y.w0 * x.w1) * north_up(y.i0, x.i1),
          static_cast<double>(y.w1 * x.w0) * north_up(y.i1, x.i0),
          static_cast<double>(y.w1 * x.w1) * north_up(y.i1, x.i1),
      };
      std::sort(terms.begin(), terms.end());
      const double level = ((terms[0] + terms[1]) + (terms[2] + terms[3])) / norm;
      img.set(r, c, colormap(level));
    }
  }
  return img;
}

Field decode_noise(const RgbImage& img) {
  Field f{img.width, img.height, std::vector<double>(img.width * img.height)};
  for (std::size_t i = 0; i < img.width * img.height; ++i) f.data[i] = inverse_colormap(img.get(i));
  return f;
}

NoiseGrid rotate_grid_ccw(const NoiseGrid& grid) {
  if (grid.rows != grid.cols) throw DomainError("rotate_grid_ccw: grid must be square");
  NoiseGrid out = grid;
  const std::size_t n = grid.rows;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      // Cell (r, c) moves to (c, n-1-r), as (x, y) -> (extent - y, x).
      out.values[c * n + (n - 1 - r)] = grid.values[r * n + c];
      out.mask[c * n + (n - 1 - r)] = grid.mask[r * n + c];
    }
  }
  return out;
}

}  // namespace noisemap
