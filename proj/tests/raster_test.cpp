#include <doctest.h>

#include <cmath>
#include <set>

#include "noisemap/errors.hpp"
#include "noisemap/raster.hpp"
#include "noisemap/rng.hpp"

using namespace noisemap;

namespace {

Polygon rect(double x0, double y0, double x1, double y1) { return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}; }

NoiseGrid constant_grid(double level, std::size_t n = 100) {
  return {500.0, 500.0 / static_cast<double>(n), n, n, std::vector<double>(n * n, level),
          std::vector<CellState>(n * n, CellState::Open)};
}

bool uniform(const RgbImage& img, Rgb c) {
  for (std::size_t i = 0; i < img.width * img.height; ++i) {
    if (!(img.get(i) == c)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("colormap anchors and interpolation") {
  for (const auto& a : kNoiseAnchors) {
    CHECK(colormap(a.db) == a.color);
    CHECK(inverse_colormap(a.color) == doctest::Approx(a.db));
  }
  CHECK(colormap(47.5) == Rgb{0, 0, 192});
  CHECK(colormap(62.5) == Rgb{128, 255, 0});
  CHECK(colormap(90.0) == Rgb{128, 0, 0});
  CHECK(colormap(10.0) == Rgb{0, 0, 128});
  CHECK(inverse_colormap({0, 0, 128}) == 45.0);
}

TEST_CASE("palette round trip over the display range") {
  double worst = 0.0;
  for (int i = 450; i <= 800; ++i) {
    const double x = i / 10.0;
    worst = std::max(worst, std::abs(inverse_colormap(colormap(x)) - x));
  }
  CHECK(worst <= 0.2);
  CHECK(std::abs(inverse_colormap(colormap(95.0)) - 80.0) <= 0.2);
  CHECK(std::abs(inverse_colormap(colormap(20.0)) - 45.0) <= 0.2);
}

TEST_CASE("off-curve colours project deterministically") {
  const double white = inverse_colormap({255, 255, 255});
  CHECK(white >= 45.0);
  CHECK(white <= 80.0);
  CHECK(inverse_colormap({255, 255, 255}) == white);
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const Rgb c{static_cast<std::uint8_t>(rng.uniform_int(0, 255)), static_cast<std::uint8_t>(rng.uniform_int(0, 255)),
                static_cast<std::uint8_t>(rng.uniform_int(0, 255))};
    const double v = inverse_colormap(c);
    CHECK(v >= 45.0);
    CHECK(v <= 80.0);
  }
}

TEST_CASE("building gray ramp") {
  CHECK(building_gray(15.0) == 220);
  CHECK(building_gray(30.0) == 80);
  CHECK(building_gray(22.5) == 150);
  CHECK(building_gray(5.0) == 220);
  CHECK(building_gray(120.0) == 80);
  CHECK(building_gray(16.0) == 211);  // 220 - 9.33
}

TEST_CASE("empty scene encodes to white") {
  const CityScene empty;
  CHECK(uniform(encode_plan(empty), kPlanBackground));
  CHECK(encode_plan(empty, 128).width == 128);
  CHECK_THROWS_AS(encode_plan(empty, 100), InputError);
}

TEST_CASE("plan paint order and widths") {
  CityScene s;
  s.roads.push_back({{{0, 250}, {500, 250}}, RoadClass::MainRoad, traffic_defaults(RoadClass::MainRoad)});
  s.greens.push_back({rect(0, 0, 100, 100)});
  s.buildings.push_back({rect(200, 240, 220, 260), 15.0});
  s.buildings.push_back({rect(300, 300, 350, 350), 30.0});
  const auto img = encode_plan(s);

  // Road band: 30 m at 1.953125 m/px covers 15 or 16 rows.
  std::size_t red_rows = 0;
  for (std::size_t r = 0; r < 256; ++r) red_rows += img.at(r, 10) == Rgb{255, 0, 0};
  CHECK(red_rows >= 15);
  CHECK(red_rows <= 16);

  CHECK(img.at(128, 107) == Rgb{220, 220, 220});  // building over road
  CHECK(img.at(256 - 166, 166) == Rgb{80, 80, 80});
  CHECK(img.at(250, 5) == kPlanGreen);  // south-west corner is the bottom-left
  CHECK(img.at(5, 250) == kPlanBackground);
}

TEST_CASE("plan images use only palette colours and are byte stable") {
  for (std::uint64_t seed = 40; seed < 60; ++seed) {
    const auto scene = generate_scene(seed);
    const auto a = encode_plan(scene);
    for (std::size_t i = 0; i < a.width * a.height; ++i) {
      if (!is_plan_color(a.get(i))) {
        FAIL("illegal colour in scene ", seed);
        break;
      }
    }
    CHECK(encode_png(a) == encode_png(encode_plan(scene)));
  }
}

TEST_CASE("building mask matches the painted footprints") {
  const auto scene = generate_scene(77);
  for (std::size_t px : {128u, 256u}) {
    const auto img = encode_plan(scene, px);
    const auto mask = building_pixel_mask(scene, px);
    for (std::size_t i = 0; i < px * px; ++i) {
      const Rgb c = img.get(i);
      const bool gray = c.r == c.g && c.g == c.b && c.r >= 80 && c.r <= 220;
      CHECK(mask[i] == gray);
    }
  }
}

TEST_CASE("constant fields encode to uniform images") {
  CHECK(uniform(encode_noise(constant_grid(45.0)), {0, 0, 128}));
  CHECK(uniform(encode_noise(constant_grid(62.5)), {128, 255, 0}));
  CHECK(uniform(encode_noise(constant_grid(90.0)), {128, 0, 0}));
  const Field f = decode_noise(encode_noise(constant_grid(57.3), 128));
  for (double v : f.data) CHECK(std::abs(v - 57.3) <= 0.2);

  auto g = constant_grid(60.0);
  g.values[17] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(encode_noise(g), DomainError);
}

TEST_CASE("bilinear upsampling of a ramp") {
  NoiseGrid g = constant_grid(0.0, 4);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 4; ++c) g.at(r, c) = 50.0 + 5.0 * static_cast<double>(c);
  }
  const Field f = decode_noise(encode_noise(g, 128));
  // Levels rise west to east and do not vary north to south.
  for (std::size_t c = 1; c < 128; ++c) CHECK(f.at(64, c) >= f.at(64, c - 1) - 0.2);
  CHECK(std::abs(f.at(0, 0) - 50.0) <= 0.2);
  CHECK(std::abs(f.at(127, 127) - 65.0) <= 0.2);
  CHECK(f.at(0, 77) == f.at(127, 77));
}

TEST_CASE("encode_noise commutes with quarter turns") {
  Rng rng(12);
  for (std::size_t n : {100u, 37u}) {
    NoiseGrid g = constant_grid(0.0, n);
    for (auto& v : g.values) v = rng.uniform(40.0, 85.0);
    for (std::size_t px : {128u, 256u}) {
      CHECK(rotate_ccw(encode_noise(g, px)) == encode_noise(rotate_grid_ccw(g), px));
    }
  }
}

TEST_CASE("noise encoding is byte stable") {
  Rng rng(3);
  NoiseGrid g = constant_grid(0.0);
  for (auto& v : g.values) v = rng.uniform(45.0, 80.0);
  CHECK(encode_png(encode_noise(g)) == encode_png(encode_noise(g)));
}

TEST_CASE("png round trip") {
  RgbImage img(7, 5);
  Rng rng(1);
  for (auto& b : img.data) b = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  CHECK(decode_png(encode_png(img)) == img);
  CHECK_THROWS(decode_png("not a png"));
}

TEST_CASE("image rotation and flip") {
  RgbImage img(3, 2);
  img.set(0, 0, {1, 0, 0});
  img.set(0, 2, {2, 0, 0});
  const auto r = rotate_ccw(img);
  CHECK(r.width == 2);
  CHECK(r.height == 3);
  CHECK(r.at(0, 0) == Rgb{2, 0, 0});  // top-right moves to top-left
  CHECK(r.at(2, 0) == Rgb{1, 0, 0});
  CHECK(rotate_ccw(rotate_ccw(rotate_ccw(rotate_ccw(img)))) == img);
  CHECK(flip_horizontal(img).at(0, 0) == Rgb{2, 0, 0});
}
