#include "noisemap/scene.hpp"

#include <cmath>
#include <sstream>

namespace noisemap {

std::string_view to_string(RoadClass c) {
  switch (c) {
    case RoadClass::UrbanFreeway: return "urban_freeway";
    case RoadClass::MainRoad: return "main_road";
    case RoadClass::SecondaryRoad: return "secondary_road";
    case RoadClass::BranchRoad: return "branch_road";
  }
  return "branch_road";
}

std::optional<RoadClass> road_class_from_string(std::string_view s) {
  for (auto c : kRoadClasses) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

TrafficSpec traffic_defaults(RoadClass c) {
  switch (c) {
    case RoadClass::UrbanFreeway: return {"two-way six-lane", 80.0, 60.0, 7400.0, 0.10};
    case RoadClass::MainRoad: return {"two-way eight-lane", 60.0, 50.0, 5700.0, 0.10};
    case RoadClass::SecondaryRoad: return {"two-way six-lane", 40.0, 30.0, 4350.0, 0.10};
    case RoadClass::BranchRoad: return {"two-way four-lane", 30.0, 30.0, 3200.0, 0.10};
  }
  return {};
}

std::string_view to_string(ElementKind k) {
  switch (k) {
    case ElementKind::Scene: return "scene";
    case ElementKind::Building: return "building";
    case ElementKind::Road: return "road";
    case ElementKind::Green: return "green";
  }
  return "scene";
}

namespace {

bool all_finite(std::span<const Vec2> pts) {
  for (const auto& p : pts) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) return false;
  }
  return true;
}

bool within_extent(std::span<const Vec2> pts, double extent) {
  constexpr double kSlack = 1e-9;
  for (const auto& p : pts) {
    if (p.x < -kSlack || p.y < -kSlack || p.x > extent + kSlack || p.y > extent + kSlack) return false;
  }
  return true;
}

/// First failing polygon invariant, or empty.
std::string polygon_problem(std::span<const Vec2> ring) {
  if (ring.size() < 3) return "polygon needs at least 3 vertices";
  if (!all_finite(ring)) return "non-finite coordinate";
  if (!is_simple(ring)) return "polygon is not simple";
  if (std::abs(signed_area(ring)) <= 0.0) return "polygon has zero area";
  return {};
}

std::string traffic_problem(const TrafficSpec& t) {
  if (!(t.flow_q > 0.0) || !std::isfinite(t.flow_q)) return "traffic flow must be positive";
  if (!(t.heavy_fraction >= 0.0 && t.heavy_fraction <= 1.0)) return "heavy fraction outside [0,1]";
  if (!(t.v_heavy > 0.0) || !std::isfinite(t.v_light) || !(t.v_light >= t.v_heavy)) {
    return "speeds must satisfy v_light >= v_heavy > 0";
  }
  return {};
}

}  // namespace

std::vector<Violation> validate_scene(const CityScene& scene) {
  std::vector<Violation> out;
  const double e = scene.extent_m;
  if (!(e > 0.0) || !std::isfinite(e)) {
    out.push_back({ElementKind::Scene, 0, "extent must be positive"});
  }

  for (std::size_t i = 0; i < scene.buildings.size(); ++i) {
    const auto& b = scene.buildings[i];
    if (auto p = polygon_problem(b.footprint); !p.empty()) {
      out.push_back({ElementKind::Building, i, p});
    } else if (!within_extent(b.footprint, e)) {
      out.push_back({ElementKind::Building, i, "outside extent"});
    }
    if (!(b.height >= kMinBuildingHeight && b.height <= kMaxBuildingHeight)) {
      out.push_back({ElementKind::Building, i, "height out of range"});
    }
  }

  for (std::size_t i = 0; i < scene.roads.size(); ++i) {
    const auto& r = scene.roads[i];
    const auto& line = r.centerline;
    if (line.size() < 2) {
      out.push_back({ElementKind::Road, i, "degenerate centerline"});
    } else if (!all_finite(line)) {
      out.push_back({ElementKind::Road, i, "non-finite coordinate"});
    } else {
      bool repeated = false;
      for (std::size_t k = 1; k < line.size(); ++k) repeated = repeated || line[k] == line[k - 1];
      if (repeated) {
        out.push_back({ElementKind::Road, i, "repeated consecutive vertex"});
      } else if (!(polyline_length(line) > 0.0)) {
        out.push_back({ElementKind::Road, i, "zero length"});
      } else if (!within_extent(line, e)) {
        out.push_back({ElementKind::Road, i, "outside extent"});
      }
    }
    if (auto t = traffic_problem(r.traffic); !t.empty()) out.push_back({ElementKind::Road, i, t});
  }

  for (std::size_t i = 0; i < scene.greens.size(); ++i) {
    const auto& g = scene.greens[i];
    if (auto p = polygon_problem(g.polygon); !p.empty()) {
      out.push_back({ElementKind::Green, i, p});
    } else if (!within_extent(g.polygon, e)) {
      out.push_back({ElementKind::Green, i, "outside extent"});
    }
  }
  return out;
}

namespace {

std::string describe(const std::vector<Violation>& v) {
  std::ostringstream os;
  os << v.size() << " scene violation(s)";
  for (const auto& x : v) os << "; " << to_string(x.kind) << "[" << x.index << "]: " << x.reason;
  return os.str();
}

}  // namespace

ValidationError::ValidationError(std::vector<Violation> violations)
    : std::runtime_error(describe(violations)), violations_(std::move(violations)) {}

void require_valid(const CityScene& scene) {
  auto v = validate_scene(scene);
  if (!v.empty()) throw ValidationError(std::move(v));
}

CityScene crop_scene(const CityScene& scene) {
  constexpr double kMinArea = 1.0;
  constexpr double kMinLength = 1.0;
  const Box box{0.0, 0.0, scene.extent_m, scene.extent_m};
  CityScene out;
  out.extent_m = scene.extent_m;
  out.seed = scene.seed;
  for (const auto& b : scene.buildings) {
    auto clipped = clip_polygon(b.footprint, box);
    if (clipped.size() >= 3 && std::abs(signed_area(clipped)) >= kMinArea && is_simple(clipped)) {
      out.buildings.push_back({std::move(clipped), b.height});
    }
  }
  for (const auto& r : scene.roads) {
    for (auto& piece : clip_polyline(r.centerline, box)) {
      if (polyline_length(piece) >= kMinLength) out.roads.push_back({std::move(piece), r.road_class, r.traffic});
    }
  }
  for (const auto& g : scene.greens) {
    auto clipped = clip_polygon(g.polygon, box);
    if (clipped.size() >= 3 && std::abs(signed_area(clipped)) >= kMinArea && is_simple(clipped)) {
      out.greens.push_back({std::move(clipped)});
    }
  }
  return out;
}

CityScene rotate_scene_ccw(const CityScene& scene) {
  const double e = scene.extent_m;
  const auto rot = [e](std::vector<Vec2> pts) {
    for (auto& p : pts) p = Vec2{e - p.y, p.x};
    return pts;
  };
  CityScene out = scene;
  for (auto& b : out.buildings) b.footprint = rot(b.footprint);
  for (auto& r : out.roads) r.centerline = rot(r.centerline);
  for (auto& g : out.greens) g.polygon = rot(g.polygon);
  return out;
}

}  // namespace noisemap
