#include <algorithm>
#include <cmath>

#include "noisemap/errors.hpp"
#include "noisemap/raster.hpp"

namespace noisemap {

namespace {

using i128 = __int128;

// Fixed point: 1/256 of a pixel. Pixel (row, col) is centred at
// (col * 256 + 128, row * 256 + 128) with rows counted from the top.
constexpr std::int64_t kSub = 256;
constexpr std::int64_t kHalf = kSub / 2;

struct FixedPoint {
  std::int64_t x, y;
};

class PlanCanvas {
 public:
  PlanCanvas(double extent_m, std::size_t px)
      : px_(px), scale_(static_cast<double>(px) * static_cast<double>(kSub) / extent_m), extent_(extent_m) {}

  FixedPoint to_fixed(Vec2 p) const {
    return {std::llround(p.x * scale_), std::llround((extent_ - p.y) * scale_)};
  }

  /// Even-odd scanline fill; calls paint(pixel_index) for covered pixels.
  template <typename Paint>
  void fill_polygon(std::span<const Vec2> ring, Paint&& paint) const {
    std::vector<FixedPoint> pts;
    pts.reserve(ring.size());
    for (const auto& p : ring) pts.push_back(to_fixed(p));
    std::int64_t min_y = INT64_MAX, max_y = INT64_MIN;
    for (const auto& p : pts) {
      min_y = std::min(min_y, p.y);
      max_y = std::max(max_y, p.y);
    }
    const std::int64_t row_lo = std::max<std::int64_t>(0, floor_div(min_y - kHalf, kSub));
    const std::int64_t row_hi = std::min<std::int64_t>(static_cast<std::int64_t>(px_) - 1, floor_div(max_y - kHalf, kSub) + 1);

    struct Crossing {
      i128 num, den;  // x = num / den, den > 0
    };
    std::vector<Crossing> xs;
    for (std::int64_t row = row_lo; row <= row_hi; ++row) {
      const std::int64_t yc = row * kSub + kHalf;
      xs.clear();
      for (std::size_t i = 0, n = pts.size(), j = n - 1; i < n; j = i++) {
        const FixedPoint a = pts[j], b = pts[i];
        if ((a.y > yc) == (b.y > yc)) continue;
        i128 den = b.y - a.y;
        i128 num = static_cast<i128>(a.x) * den + static_cast<i128>(yc - a.y) * (b.x - a.x);
        if (den < 0) {
          den = -den;
          num = -num;
        }
        xs.push_back({num, den});
      }
      std::sort(xs.begin(), xs.end(), [](const Crossing& l, const Crossing& r) { return l.num * r.den < r.num * l.den; });
      for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
        const std::int64_t c0 = std::max<std::int64_t>(0, first_column_at_or_after(xs[k].num, xs[k].den));
        const std::int64_t c1 = std::min<std::int64_t>(static_cast<std::int64_t>(px_),
                                                       first_column_at_or_after(xs[k + 1].num, xs[k + 1].den));
        for (std::int64_t c = c0; c < c1; ++c) paint(static_cast<std::size_t>(row) * px_ + static_cast<std::size_t>(c));
      }
    }
  }

  /// Pixels whose centre lies within `radius_m` of the polyline.
  template <typename Paint>
  void stroke_polyline(std::span<const Vec2> line, double radius_m, Paint&& paint) const {
    const double r_fixed = radius_m * scale_;
    const auto r2 = static_cast<i128>(std::llround(r_fixed * r_fixed));
    const auto reach = static_cast<std::int64_t>(std::ceil(r_fixed)) + 1;
    for (std::size_t s = 1; s < line.size(); ++s) {
      const FixedPoint a = to_fixed(line[s - 1]), b = to_fixed(line[s]);
      const i128 abx = b.x - a.x, aby = b.y - a.y;
      const i128 ab2 = abx * abx + aby * aby;
      const auto col_lo = std::max<std::int64_t>(0, floor_div(std::min(a.x, b.x) - reach - kHalf, kSub));
      const auto col_hi = std::min<std::int64_t>(static_cast<std::int64_t>(px_) - 1, floor_div(std::max(a.x, b.x) + reach - kHalf, kSub) + 1);
      const auto row_lo = std::max<std::int64_t>(0, floor_div(std::min(a.y, b.y) - reach - kHalf, kSub));
      const auto row_hi = std::min<std::int64_t>(static_cast<std::int64_t>(px_) - 1, floor_div(std::max(a.y, b.y) + reach - kHalf, kSub) + 1);
      for (std::int64_t row = row_lo; row <= row_hi; ++row) {
        for (std::int64_t col = col_lo; col <= col_hi; ++col) {
          const i128 apx = col * kSub + kHalf - a.x, apy = row * kSub + kHalf - a.y;
          const i128 proj = apx * abx + apy * aby;
          bool hit;
          if (ab2 == 0 || proj <= 0) {
            hit = apx * apx + apy * apy <= r2;
          } else if (proj >= ab2) {
            const i128 bpx = apx - abx, bpy = apy - aby;
            hit = bpx * bpx + bpy * bpy <= r2;
          } else {
            // dist^2 * |ab|^2 = |ap|^2 |ab|^2 - (ap.ab)^2
            hit = (apx * apx + apy * apy) * ab2 - proj * proj <= r2 * ab2;
          }
          if (hit) paint(static_cast<std::size_t>(row) * px_ + static_cast<std::size_t>(col));
        }
      }
    }
  }

 private:
  static std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
  }

  /// Smallest column whose centre x satisfies centre >= num/den.
  static std::int64_t first_column_at_or_after(i128 num, i128 den) {
    // col * 256 + 128 >= num / den  <=>  col >= (num - 128 den) / (256 den)
    const i128 n = num - kHalf * den;
    const i128 d = kSub * den;
    i128 q = n / d;
    if (n % d != 0 && n > 0) ++q;
    return static_cast<std::int64_t>(q);
  }

  std::size_t px_;
  double scale_;
  double extent_;
};

void check_size(std::size_t px) {
  if (!is_supported_image_size(px)) throw InputError("unsupported image size " + std::to_string(px) + " (use 128 or 256)");
}

}  // namespace

RgbImage encode_plan(const CityScene& scene, std::size_t px) {
  check_size(px);
  require_valid(scene);
  RgbImage img(px, px, kPlanBackground);
  const PlanCanvas canvas(scene.extent_m, px);
  for (const auto& g : scene.greens) {
    canvas.fill_polygon(g.polygon, [&](std::size_t i) { img.set(i, kPlanGreen); });
  }
  for (const auto& r : scene.roads) {
    const Rgb color = road_color(r.road_class);
    canvas.stroke_polyline(r.centerline, road_width_m(r.road_class) / 2.0, [&](std::size_t i) { img.set(i, color); });
  }
  for (const auto& b : scene.buildings) {
    const std::uint8_t g = building_gray(b.height);
    canvas.fill_polygon(b.footprint, [&](std::size_t i) { img.set(i, Rgb{g, g, g}); });
  }
  return img;
}

std::vector<bool> building_pixel_mask(const CityScene& scene, std::size_t px) {
  check_size(px);
  std::vector<bool> mask(px * px, false);
  const PlanCanvas canvas(scene.extent_m, px);
  for (const auto& b : scene.buildings) {
    canvas.fill_polygon(b.footprint, [&](std::size_t i) { mask[i] = true; });
  }
  return mask;
}

}  // namespace noisemap
