#include <algorithm>
#include <cmath>

#include "noisemap/acoustics.hpp"
#include "noisemap/errors.hpp"

namespace noisemap {

void check_propagation_config(const PropagationConfig& cfg) {
  const double positive[] = {cfg.receiver_height, cfg.source_height, cfg.grid_spacing,  cfg.rep_frequency,
                             cfg.sound_speed,     cfg.lumped_absorption, cfg.green_rate, cfg.green_cap,
                             cfg.segment_len};
  for (double v : positive) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("propagation parameters must be strictly positive");
  }
  if (!(cfg.barrier_cap >= 0.0)) throw ConfigError("barrier_cap must be non-negative");
}

namespace {

constexpr double kReferenceSpeed = 50.0;  // km/h

double light_vehicle_level(double v) { return 100.0 + 30.0 * std::log10(v / kReferenceSpeed); }
double heavy_vehicle_level(double v) { return 110.0 + 25.0 * std::log10(v / kReferenceSpeed); }

}  // namespace

double emission_per_metre(const TrafficSpec& t) {
  if (!(t.flow_q > 0.0) || !(t.v_light > 0.0) || !(t.v_heavy > 0.0)) {
    throw DomainError("emission_per_metre: speeds and flow must be positive");
  }
  if (!(t.heavy_fraction >= 0.0 && t.heavy_fraction <= 1.0)) {
    throw DomainError("emission_per_metre: heavy fraction outside [0,1]");
  }
  const double q_light = (1.0 - t.heavy_fraction) * t.flow_q;
  const double q_heavy = t.heavy_fraction * t.flow_q;
  // Vehicles per metre of road times per-vehicle power.
  const double light = q_light / (1000.0 * t.v_light) * std::pow(10.0, light_vehicle_level(t.v_light) / 10.0);
  const double heavy = q_heavy / (1000.0 * t.v_heavy) * std::pow(10.0, heavy_vehicle_level(t.v_heavy) / 10.0);
  return 10.0 * std::log10(light + heavy);
}

std::vector<PointSource> decompose_road(const Road& road, const PropagationConfig& cfg) {
  if (!(cfg.segment_len > 0.0)) throw DomainError("decompose_road: segment_len must be positive");
  const auto& line = road.centerline;
  if (line.size() < 2 || !(polyline_length(line) > 0.0)) throw DomainError("decompose_road: degenerate road");

  const double per_metre = emission_per_metre(road.traffic);
  std::vector<PointSource> out;
  for (std::size_t i = 1; i < line.size(); ++i) {
    const Vec2 a = line[i - 1], b = line[i];
    const double len = distance(a, b);
    if (len <= 0.0) continue;
    const auto pieces = static_cast<std::size_t>(std::max(1.0, std::ceil(len / cfg.segment_len)));
    const double piece_len = len / static_cast<double>(pieces);
    const double power = per_metre + 10.0 * std::log10(piece_len);
    for (std::size_t k = 0; k < pieces; ++k) {
      const double t = (static_cast<double>(k) + 0.5) / static_cast<double>(pieces);
      const Vec2 mid = a + t * (b - a);
      out.push_back({{mid.x, mid.y, cfg.source_height}, power});
    }
  }
  return out;
}

std::vector<PointSource> scene_sources(const CityScene& scene, const PropagationConfig& cfg) {
  std::vector<PointSource> out;
  for (const auto& r : scene.roads) {
    auto s = decompose_road(r, cfg);
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

double maekawa_attenuation(double path_difference, const PropagationConfig& cfg) {
  const double fresnel = 2.0 * path_difference / cfg.wavelength();
  const double arg = 3.0 + 20.0 * fresnel;
  if (arg <= 1.0) return 0.0;
  return std::clamp(10.0 * std::log10(arg), 0.0, cfg.barrier_cap);
}

}  // namespace noisemap
