#include <algorithm>
#include <cmath>

#include "noisemap/errors.hpp"
#include "noisemap/rng.hpp"
#include "noisemap/scene.hpp"

namespace noisemap {

void check_generation_config(const GenerationConfig& cfg) {
  if (!(cfg.extent_m > 0.0)) throw ConfigError("extent_m must be positive");
  const auto& bc = cfg.building_count_range;
  if (bc[0] < 0 || bc[1] < bc[0]) throw ConfigError("building_count_range must satisfy 0 <= min <= max");
  const auto& hr = cfg.height_range_m;
  if (!(hr[0] >= kMinBuildingHeight && hr[1] >= hr[0] && hr[1] <= kMaxBuildingHeight)) {
    throw ConfigError("height_range_m must satisfy 1 <= min <= max <= 200");
  }
  const auto& sr = cfg.road_spacing_range_m;
  if (!(sr[0] >= 40.0 && sr[1] >= sr[0])) throw ConfigError("road_spacing_range_m must satisfy 40 <= min <= max");
  if (!(cfg.green_probability >= 0.0 && cfg.green_probability <= 1.0)) {
    throw ConfigError("green_probability must lie in [0,1]");
  }
  if (!(cfg.crop_margin_m >= 0.0)) throw ConfigError("crop_margin_m must be non-negative");
}

namespace {

constexpr double kSnap = 0.5;
constexpr double kSetback = 4.0;

double snap(double v) { return std::round(v / kSnap) * kSnap; }

double half_width(RoadClass c) {
  switch (c) {
    case RoadClass::UrbanFreeway: return 20.0;
    case RoadClass::MainRoad: return 15.0;
    case RoadClass::SecondaryRoad: return 10.0;
    case RoadClass::BranchRoad: return 6.0;
  }
  return 6.0;
}

struct GridLine {
  double pos;
  bool vertical;
  RoadClass cls = RoadClass::BranchRoad;
};

std::vector<double> line_positions(Rng& rng, double canvas, const std::array<double, 2>& spacing) {
  std::vector<double> out;
  double p = snap(rng.uniform(0.25, 1.0) * spacing[0]);
  while (p < canvas) {
    out.push_back(p);
    p = snap(p + rng.uniform(spacing[0], spacing[1]));
  }
  return out;
}

Polygon rect(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

/// Rectangle with one corner notch removed; counter-clockwise.
Polygon l_shape(double x0, double y0, double x1, double y1, double cw, double ch, int corner) {
  switch (corner) {
    case 0:  // notch at south-west
      return {{x0 + cw, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0 + ch}, {x0 + cw, y0 + ch}};
    case 1:  // south-east
      return {{x0, y0}, {x1 - cw, y0}, {x1 - cw, y0 + ch}, {x1, y0 + ch}, {x1, y1}, {x0, y1}};
    case 2:  // north-east
      return {{x0, y0}, {x1, y0}, {x1, y1 - ch}, {x1 - cw, y1 - ch}, {x1 - cw, y1}, {x0, y1}};
    default:  // north-west
      return {{x0, y0}, {x1, y0}, {x1, y1}, {x0 + cw, y1}, {x0 + cw, y1 - ch}, {x0, y1 - ch}};
  }
}

}  // namespace

CityScene generate_scene(std::uint64_t seed, const GenerationConfig& cfg) {
  check_generation_config(cfg);
  Rng rng(seed);
  const double extent = cfg.extent_m;
  const double canvas = extent + 2.0 * cfg.crop_margin_m;

  // Orthogonal road hierarchy across the whole canvas.
  std::vector<GridLine> lines;
  for (double x : line_positions(rng, canvas, cfg.road_spacing_range_m)) lines.push_back({x, true});
  for (double y : line_positions(rng, canvas, cfg.road_spacing_range_m)) lines.push_back({y, false});
  {
    std::vector<std::size_t> order(lines.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(std::span<std::size_t>(order));
    const auto n_freeway = rng.uniform_int(0, 1);
    const auto n_main = rng.uniform_int(1, 2);
    const auto n_secondary = rng.uniform_int(2, 4);
    std::size_t k = 0;
    const auto assign = [&](std::int64_t count, RoadClass c) {
      for (std::int64_t i = 0; i < count && k < order.size(); ++i) lines[order[k++]].cls = c;
    };
    assign(n_freeway, RoadClass::UrbanFreeway);
    assign(n_main, RoadClass::MainRoad);
    assign(n_secondary, RoadClass::SecondaryRoad);
  }

  const double ox = snap(rng.uniform(0.0, canvas - extent));
  const double oy = snap(rng.uniform(0.0, canvas - extent));

  CityScene layout;
  layout.extent_m = extent;
  for (const auto& l : lines) {
    Road r;
    r.road_class = l.cls;
    r.traffic = cfg.traffic_override.value_or(traffic_defaults(l.cls));
    if (l.vertical) {
      r.centerline = {{l.pos - ox, -oy}, {l.pos - ox, canvas - oy}};
    } else {
      r.centerline = {{-ox, l.pos - oy}, {canvas - ox, l.pos - oy}};
    }
    layout.roads.push_back(std::move(r));
  }

  // Blocks between consecutive parallel roads, including the canvas borders.
  std::vector<GridLine> xs, ys;
  for (const auto& l : lines) (l.vertical ? xs : ys).push_back(l);
  const auto by_pos = [](const GridLine& a, const GridLine& b) { return a.pos < b.pos; };
  std::sort(xs.begin(), xs.end(), by_pos);
  std::sort(ys.begin(), ys.end(), by_pos);
  const auto bounds = [&](const std::vector<GridLine>& ls) {
    std::vector<std::pair<double, double>> spans;  // usable [lo, hi]
    double lo = 0.0;
    for (const auto& l : ls) {
      spans.emplace_back(lo, l.pos - half_width(l.cls) - kSetback);
      lo = l.pos + half_width(l.cls) + kSetback;
    }
    spans.emplace_back(lo, canvas);
    return spans;
  };

  const auto [hmin, hmax] = cfg.height_range_m;
  std::vector<Building> candidates;
  for (const auto& [bx0, bx1] : bounds(xs)) {
    for (const auto& [by0, by1] : bounds(ys)) {
      const double bw = bx1 - bx0, bh = by1 - by0;
      if (bw < 12.0 || bh < 12.0) continue;
      const double parcel = rng.uniform(30.0, 60.0);
      const auto nx = std::max<std::int64_t>(1, std::llround(bw / parcel));
      const auto ny = std::max<std::int64_t>(1, std::llround(bh / parcel));
      for (std::int64_t i = 0; i < nx; ++i) {
        for (std::int64_t j = 0; j < ny; ++j) {
          const double px0 = snap(bx0 + bw * static_cast<double>(i) / nx);
          const double px1 = snap(bx0 + bw * static_cast<double>(i + 1) / nx);
          const double py0 = snap(by0 + bh * static_cast<double>(j) / ny);
          const double py1 = snap(by0 + bh * static_cast<double>(j + 1) / ny);
          if (rng.bernoulli(cfg.green_probability)) {
            layout.greens.push_back({rect(px0 + 1.0 - ox, py0 + 1.0 - oy, px1 - 1.0 - ox, py1 - 1.0 - oy)});
            continue;
          }
          const double x0 = snap(px0 + rng.uniform(2.0, 6.0)) - ox;
          const double x1 = snap(px1 - rng.uniform(2.0, 6.0)) - ox;
          const double y0 = snap(py0 + rng.uniform(2.0, 6.0)) - oy;
          const double y1 = snap(py1 - rng.uniform(2.0, 6.0)) - oy;
          const double height = snap(rng.uniform(hmin, hmax));
          if (x1 - x0 < 6.0 || y1 - y0 < 6.0) continue;
          Polygon fp;
          if (rng.bernoulli(0.3) && x1 - x0 >= 16.0 && y1 - y0 >= 16.0) {
            const double cw = snap((x1 - x0) * rng.uniform(0.3, 0.6));
            const double ch = snap((y1 - y0) * rng.uniform(0.3, 0.6));
            fp = l_shape(x0, y0, x1, y1, cw, ch, static_cast<int>(rng.uniform_int(0, 3)));
          } else {
            fp = rect(x0, y0, x1, y1);
          }
          candidates.push_back({std::move(fp), std::clamp(height, hmin, hmax)});
        }
      }
    }
  }
  layout.buildings = std::move(candidates);

  CityScene scene = crop_scene(layout);
  scene.seed = static_cast<std::int64_t>(seed & 0x7FFFFFFFFFFFFFFFULL);

  const auto target = static_cast<std::size_t>(rng.uniform_int(cfg.building_count_range[0], cfg.building_count_range[1]));
  while (scene.buildings.size() > target) {
    const auto victim = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(scene.buildings.size()) - 1));
    scene.buildings.erase(scene.buildings.begin() + static_cast<std::ptrdiff_t>(victim));
  }

  if (scene.roads.empty()) {
    // Spacing wider than the crop window: keep the contract of at least one road.
    const double mid = snap(extent / 2.0);
    scene.roads.push_back({{{0.0, mid}, {extent, mid}},
                           RoadClass::BranchRoad,
                           cfg.traffic_override.value_or(traffic_defaults(RoadClass::BranchRoad))});
    std::erase_if(scene.buildings, [&](const Building& b) {
      const Box bb = bounding_box(b.footprint);
      return bb.min_y < mid + 10.0 && bb.max_y > mid - 10.0;
    });
    std::erase_if(scene.greens, [&](const GreenArea& g) {
      const Box bb = bounding_box(g.polygon);
      return bb.min_y < mid + 10.0 && bb.max_y > mid - 10.0;
    });
  }
  return scene;
}

}  // namespace noisemap
