#include <algorithm>
#include <cmath>

#include "noisemap/raster.hpp"

namespace noisemap {

namespace {

std::uint8_t lerp_channel(std::uint8_t a, std::uint8_t b, double t) {
  return static_cast<std::uint8_t>(std::lround(static_cast<double>(a) + t * (static_cast<double>(b) - a)));
}

}  // namespace

Rgb colormap(double level_db) {
  const double x = std::clamp(level_db, kNoiseMinDb, kNoiseMaxDb);
  for (std::size_t i = 1; i < kNoiseAnchors.size(); ++i) {
    const auto& lo = kNoiseAnchors[i - 1];
    const auto& hi = kNoiseAnchors[i];
    if (x <= hi.db) {
      const double t = (x - lo.db) / (hi.db - lo.db);
      return {lerp_channel(lo.color.r, hi.color.r, t), lerp_channel(lo.color.g, hi.color.g, t),
              lerp_channel(lo.color.b, hi.color.b, t)};
    }
  }
  return kNoiseAnchors.back().color;
}

double inverse_colormap(Rgb color) {
  const double p[3] = {static_cast<double>(color.r), static_cast<double>(color.g), static_cast<double>(color.b)};
  double best_d2 = INFINITY;
  double best_db = kNoiseMinDb;
  for (std::size_t i = 1; i < kNoiseAnchors.size(); ++i) {
    const auto& lo = kNoiseAnchors[i - 1];
    const auto& hi = kNoiseAnchors[i];
    const double a[3] = {static_cast<double>(lo.color.r), static_cast<double>(lo.color.g),
                         static_cast<double>(lo.color.b)};
    const double d[3] = {hi.color.r - a[0], hi.color.g - a[1], hi.color.b - a[2]};
    const double len2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
    double t = ((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1] + (p[2] - a[2]) * d[2]) / len2;
    t = std::clamp(t, 0.0, 1.0);
    double d2 = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double e = p[k] - (a[k] + t * d[k]);
      d2 += e * e;
    }
    if (d2 < best_d2) {
      best_d2 = d2;
      best_db = lo.db + t * (hi.db - lo.db);
    }
  }
  return best_db;
}

Rgb road_color(RoadClass c) {
  switch (c) {
    case RoadClass::UrbanFreeway: return {0, 0, 255};
    case RoadClass::MainRoad: return {255, 0, 0};
    case RoadClass::SecondaryRoad: return {255, 255, 0};
    case RoadClass::BranchRoad: return {50, 205, 50};
  }
  return {50, 205, 50};
}

double road_width_m(RoadClass c) {
  switch (c) {
    case RoadClass::UrbanFreeway: return 40.0;
    case RoadClass::MainRoad: return 30.0;
    case RoadClass::SecondaryRoad: return 20.0;
    case RoadClass::BranchRoad: return 12.0;
  }
  return 12.0;
}

std::uint8_t building_gray(double height_m) {
  const double g = std::round(220.0 - (height_m - 15.0) * 140.0 / 15.0);
  return static_cast<std::uint8_t>(std::clamp(g, 80.0, 220.0));
}

bool is_plan_color(Rgb c) {
  if (c == kPlanBackground || c == kPlanGreen) return true;
  for (auto rc : kRoadClasses) {
    if (c == road_color(rc)) return true;
  }
  return c.r == c.g && c.g == c.b && c.r >= kBuildingGrayDark && c.r <= kBuildingGrayLight;
}

bool is_supported_image_size(std::size_t px) { return px == 128 || px == 256; }

}  // namespace noisemap
