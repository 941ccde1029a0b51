#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "noisemap/geometry.hpp"

namespace noisemap {

enum class RoadClass { UrbanFreeway, MainRoad, SecondaryRoad, BranchRoad };

inline constexpr std::array<RoadClass, 4> kRoadClasses = {
    RoadClass::UrbanFreeway, RoadClass::MainRoad, RoadClass::SecondaryRoad, RoadClass::BranchRoad};

/// Schema token, e.g. "main_road".
std::string_view to_string(RoadClass c);
std::optional<RoadClass> road_class_from_string(std::string_view s);

/// Design traffic for one road. Speeds in km/h, flow in vehicles per hour.
struct TrafficSpec {
  std::string lanes_desc;
  double v_light = 0.0;
  double v_heavy = 0.0;
  double flow_q = 0.0;
  double heavy_fraction = 0.0;

  friend bool operator==(const TrafficSpec&, const TrafficSpec&) = default;
};

/// Design traffic per road class (urban road design tables): light and heavy
/// vehicle speeds, hourly flow, 10% heavy vehicles.
TrafficSpec traffic_defaults(RoadClass c);

struct Building {
  Polygon footprint;
  double height = 0.0;  // metres
};

struct Road {
  Polyline centerline;
  RoadClass road_class = RoadClass::BranchRoad;
  TrafficSpec traffic;
};

struct GreenArea {
  Polygon polygon;
};

/// Vector city model. Scene-local metres, y-up, origin at the south-west
/// corner of the [0, extent_m]^2 square.
struct CityScene {
  double extent_m = 500.0;
  std::vector<Building> buildings;
  std::vector<Road> roads;
  std::vector<GreenArea> greens;
  std::optional<std::int64_t> seed;
};

inline constexpr double kMinBuildingHeight = 1.0;
inline constexpr double kMaxBuildingHeight = 200.0;

// ---------------------------------------------------------------------------
// Validation

enum class ElementKind { Scene, Building, Road, Green };
std::string_view to_string(ElementKind k);

struct Violation {
  ElementKind kind = ElementKind::Scene;
  std::size_t index = 0;
  std::string reason;

  friend bool operator==(const Violation&, const Violation&) = default;
};

/// Empty iff every type invariant holds. Violations are ordered by kind then
/// index.
std::vector<Violation> validate_scene(const CityScene& scene);

/// Thrown by operations requiring a valid scene.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  std::vector<Violation> violations_;
};

void require_valid(const CityScene& scene);

/// Clips all geometry to the extent square. Polygons reduced below 1 m^2 and
/// road pieces shorter than 1 m are dropped; a road may split into several.
CityScene crop_scene(const CityScene& scene);

/// Rotates the scene 90 degrees counter-clockwise about the square's centre:
/// (x, y) -> (extent - y, x).
CityScene rotate_scene_ccw(const CityScene& scene);

// ---------------------------------------------------------------------------
// Procedural generation

struct GenerationConfig {
  double extent_m = 500.0;
  std::array<int, 2> building_count_range{40, 90};
  std::array<double, 2> height_range_m{15.0, 30.0};
  std::array<double, 2> road_spacing_range_m{90.0, 170.0};
  double green_probability = 0.15;
  /// Layout canvas margin beyond the extent; the result is a random crop.
  double crop_margin_m = 150.0;
  /// When set, every generated road carries this traffic instead of the
  /// class default.
  std::optional<TrafficSpec> traffic_override;
};

/// Throws ConfigError for empty or inverted ranges.
void check_generation_config(const GenerationConfig& cfg);

/// Pure function of (seed, cfg); the result always passes validate_scene and
/// contains at least one road.
CityScene generate_scene(std::uint64_t seed, const GenerationConfig& cfg = {});

// ---------------------------------------------------------------------------
// Serialization (JSON text)

/// Throws ParseError with the field path on schema violations and
/// ValidationError on geometry violations.
CityScene import_scene(std::string_view text);

/// Same as import_scene without the validation step.
CityScene parse_scene(std::string_view text);

/// Canonical, byte-stable text form.
std::string export_scene(const CityScene& scene);

}  // namespace noisemap
