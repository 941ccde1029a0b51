#pragma once

#include <array>
#include <span>

#include "noisemap/acoustics.hpp"
#include "noisemap/image.hpp"
#include "noisemap/scene.hpp"

namespace noisemap {

// ---------------------------------------------------------------------------
// Noise palette: dark blue (45 dB) through cyan, green, yellow, orange, red to
// dark red (80 dB), linear between anchors, clamped outside.

struct PaletteAnchor {
  double db;
  Rgb color;
};

inline constexpr std::array<PaletteAnchor, 8> kNoiseAnchors{{
    {45.0, {0, 0, 128}},
    {50.0, {0, 0, 255}},
    {55.0, {0, 255, 255}},
    {60.0, {0, 255, 0}},
    {65.0, {255, 255, 0}},
    {70.0, {255, 165, 0}},
    {75.0, {255, 0, 0}},
    {80.0, {128, 0, 0}},
}};

inline constexpr double kNoiseMinDb = 45.0;
inline constexpr double kNoiseMaxDb = 80.0;

Rgb colormap(double level_db);

/// dB of the nearest point on the (unrounded) palette curve, Euclidean in
/// RGB. Ties resolve to the lower level.
double inverse_colormap(Rgb color);

// ---------------------------------------------------------------------------
// Plan palette

inline constexpr Rgb kPlanBackground{255, 255, 255};
inline constexpr Rgb kPlanGreen{0, 128, 0};
inline constexpr std::uint8_t kBuildingGrayLight = 220;  // at 15 m
inline constexpr std::uint8_t kBuildingGrayDark = 80;    // at 30 m and above

Rgb road_color(RoadClass c);
/// Rendered road width in metres, centred on the centerline.
double road_width_m(RoadClass c);
/// round(220 - (h - 15) * 140 / 15), clamped to [80, 220].
std::uint8_t building_gray(double height_m);

/// True for white, green, the four road colours, and grays in [80, 220].
bool is_plan_color(Rgb c);

/// Supported image sizes.
bool is_supported_image_size(std::size_t px);

/// Paints background, green areas, roads, then buildings with integer
/// scanline fills (no anti-aliasing). Throws ValidationError for invalid
/// scenes and InputError for unsupported sizes.
RgbImage encode_plan(const CityScene& scene, std::size_t px = 256);

/// Per-pixel "inside a building footprint" flags at the plan resolution,
/// using the same fill rule as encode_plan.
std::vector<bool> building_pixel_mask(const CityScene& scene, std::size_t px);

/// Bilinear upsample of a filled grid to px x px followed by the colormap.
/// Throws DomainError when any value is non-finite.
RgbImage encode_noise(const NoiseGrid& grid, std::size_t px = 256);

/// Per-pixel inverse_colormap; row 0 is the top (north) row.
Field decode_noise(const RgbImage& img);

/// Quarter-turn counter-clockwise rotation of the grid content, matching
/// rotate_scene_ccw.
NoiseGrid rotate_grid_ccw(const NoiseGrid& grid);

}  // namespace noisemap
