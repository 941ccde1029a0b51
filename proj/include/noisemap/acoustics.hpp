#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "noisemap/geometry.hpp"
#include "noisemap/scene.hpp"

namespace noisemap {

/// Outdoor propagation settings for the ground-truth simulator.
struct PropagationConfig {
  double receiver_height = 4.0;     // m
  double source_height = 0.5;       // m
  double grid_spacing = 5.0;        // m
  double rep_frequency = 500.0;     // Hz, used for screen diffraction only
  double sound_speed = 343.0;       // m/s
  double barrier_cap = 20.0;        // dB
  double lumped_absorption = 0.005; // dB/m
  double green_rate = 0.05;         // dB per metre of path inside green areas
  double green_cap = 10.0;          // dB
  double segment_len = 10.0;        // m

  double wavelength() const { return sound_speed / rep_frequency; }
};

/// Throws ConfigError unless every field is strictly positive (barrier_cap may
/// be zero).
void check_propagation_config(const PropagationConfig& cfg);

struct PointSource {
  Vec3 position;
  double power = 0.0;  // sound power level, dB(A)
};

/// Sound power per metre of road, dB(A)/m. Light and heavy vehicle classes
/// are summed energetically:
///   L' = 10 lg( Ql/(1000 vl) 10^(Ll(vl)/10) + Qh/(1000 vh) 10^(Lh(vh)/10) )
/// with Ll(v) = 100 + 30 lg(v/50), Lh(v) = 110 + 25 lg(v/50).
/// Throws DomainError for non-positive speeds or flow.
double emission_per_metre(const TrafficSpec& traffic);

/// Splits every centerline edge into equal pieces no longer than
/// cfg.segment_len; each piece becomes one source at its midpoint carrying
/// emission_per_metre + 10 lg(piece length).
std::vector<PointSource> decompose_road(const Road& road, const PropagationConfig& cfg);

/// All sources of a scene, in road order.
std::vector<PointSource> scene_sources(const CityScene& scene, const PropagationConfig& cfg);

/// Maekawa screen loss for path difference delta (m):
/// clamp(10 lg(3 + 20 N), 0, cap) with Fresnel number N = 2 delta / lambda.
double maekawa_attenuation(double path_difference, const PropagationConfig& cfg);

/// Largest single-screen loss over the buildings that block the straight
/// path. A building blocks when the 2-D sight line crosses its footprint and
/// its height exceeds the sight-line height at the crossing.
double barrier_attenuation(const PointSource& src, Vec3 receiver, std::span<const Building> buildings,
                           const PropagationConfig& cfg);

/// Energetic sum over sources of
///   power - (20 lg d + 11) - A_bar - min(green_rate g, green_cap) - alpha d
/// where d is the 3-D distance floored at 1 m and g the sight-line length
/// inside green areas. Throws DomainError when `sources` is empty.
double receiver_level(Vec3 receiver, std::span<const PointSource> sources, const CityScene& scene,
                      const PropagationConfig& cfg);

enum class CellState : std::uint8_t { Open = 0, InsideBuilding = 1 };

/// Level field over the scene square, one value per cell centre. Row 0 is the
/// southernmost row; cell (r, c) is centred at ((c + .5) s, (r + .5) s).
struct NoiseGrid {
  double extent_m = 0.0;
  double spacing_m = 0.0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;   // dB(A); NaN for unfilled building cells
  std::vector<CellState> mask;

  double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  CellState state(std::size_t r, std::size_t c) const { return mask[r * cols + c]; }
  Vec2 cell_center(std::size_t r, std::size_t c) const {
    return {(static_cast<double>(c) + 0.5) * spacing_m, (static_cast<double>(r) + 0.5) * spacing_m};
  }
};

/// Level reported for open cells of a scene with no roads.
inline constexpr double kQuietFloorDb = 0.0;

struct SimulationOptions {
  /// 0 picks std::thread::hardware_concurrency().
  unsigned workers = 0;
  /// Abort with TimeoutError once passed.
  std::optional<std::chrono::steady_clock::time_point> deadline;
};

/// Receivers at every cell centre at receiver height. Cells whose centre lies
/// inside a footprint are masked and left NaN. Results do not depend on the
/// worker count. Throws ValidationError for invalid scenes.
NoiseGrid simulate_grid(const CityScene& scene, const PropagationConfig& cfg = {},
                        const SimulationOptions& options = {});

/// Masked cells take the value of the nearest open cell (Euclidean distance
/// on indices; ties go to the lowest row, then column). Throws DomainError
/// when no cell is open.
NoiseGrid fill_masked(const NoiseGrid& grid);

/// Binary grid file; layout documented in docs/formats.md.
void write_grid(const NoiseGrid& grid, const std::filesystem::path& path);
NoiseGrid read_grid(const std::filesystem::path& path);

}  // namespace noisemap
