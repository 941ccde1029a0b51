#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "noisemap/acoustics.hpp"
#include "noisemap/errors.hpp"

namespace noisemap {

namespace {

/// Scene geometry with cached bounding boxes, shared read-only by workers.
class PropagationContext {
 public:
  PropagationContext(std::span<const Building> buildings, std::span<const GreenArea> greens,
                     const PropagationConfig& cfg)
      : buildings_(buildings), greens_(greens), cfg_(cfg) {
    for (const auto& b : buildings_) building_boxes_.push_back(bounding_box(b.footprint));
    for (const auto& g : greens_) green_boxes_.push_back(bounding_box(g.polygon));
  }

  double barrier(const PointSource& src, Vec3 rcv) const {
    const Vec2 a = src.position.xy(), b = rcv.xy();
    const Box path = bounding_box(std::array{a, b});
    const double direct = distance(src.position, rcv);
    double worst = 0.0;
    for (std::size_t i = 0; i < buildings_.size(); ++i) {
      if (!path.overlaps(building_boxes_[i])) continue;
      const auto& bld = buildings_[i];
      const auto ts = segment_ring_crossings(a, b, bld.footprint);
      if (ts.empty()) continue;
      const auto z_at = [&](double t) { return src.position.z + t * (rcv.z - src.position.z); };
      const double t_first = ts.front();
      if (!(bld.height > std::min(z_at(t_first), z_at(ts.back())))) continue;
      const Vec2 edge_xy = a + t_first * (b - a);
      const Vec3 edge{edge_xy.x, edge_xy.y, bld.height};
      const double delta = distance(src.position, edge) + distance(edge, rcv) - direct;
      worst = std::max(worst, maekawa_attenuation(delta, cfg_));
    }
    return worst;
  }

  double green_length(Vec2 a, Vec2 b) const {
    const Box path = bounding_box(std::array{a, b});
    double g = 0.0;
    for (std::size_t i = 0; i < greens_.size(); ++i) {
      if (!path.overlaps(green_boxes_[i])) continue;
      g += segment_length_inside(a, b, greens_[i].polygon);
    }
    return g;
  }

  double level(Vec3 rcv, std::span<const PointSource> sources) const {
    double energy = 0.0;
    for (const auto& s : sources) {
      const double d = std::max(1.0, distance(s.position, rcv));
      const double divergence = 20.0 * std::log10(d) + 11.0;
      const double ground = std::min(cfg_.green_rate * green_length(s.position.xy(), rcv.xy()), cfg_.green_cap);
      const double li = s.power - divergence - barrier(s, rcv) - ground - cfg_.lumped_absorption * d;
      energy += std::pow(10.0, li / 10.0);
    }
    return 10.0 * std::log10(energy);
  }

 private:
  std::span<const Building> buildings_;
  std::span<const GreenArea> greens_;
  const PropagationConfig& cfg_;
  std::vector<Box> building_boxes_;
  std::vector<Box> green_boxes_;
};

}  // namespace

double barrier_attenuation(const PointSource& src, Vec3 receiver, std::span<const Building> buildings,
                           const PropagationConfig& cfg) {
  return PropagationContext(buildings, {}, cfg).barrier(src, receiver);
}

double receiver_level(Vec3 receiver, std::span<const PointSource> sources, const CityScene& scene,
                      const PropagationConfig& cfg) {
  if (sources.empty()) throw DomainError("receiver_level: no sources");
  return PropagationContext(scene.buildings, scene.greens, cfg).level(receiver, sources);
}

NoiseGrid simulate_grid(const CityScene& scene, const PropagationConfig& cfg, const SimulationOptions& options) {
  check_propagation_config(cfg);
  require_valid(scene);

  NoiseGrid grid;
  grid.extent_m = scene.extent_m;
  grid.spacing_m = cfg.grid_spacing;
  grid.rows = grid.cols = static_cast<std::size_t>(std::ceil(scene.extent_m / cfg.grid_spacing - 1e-9));
  grid.values.assign(grid.rows * grid.cols, std::numeric_limits<double>::quiet_NaN());
  grid.mask.assign(grid.rows * grid.cols, CellState::Open);

  std::vector<Box> boxes;
  for (const auto& b : scene.buildings) boxes.push_back(bounding_box(b.footprint));
  const auto inside_building = [&](Vec2 p) {
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      if (boxes[i].contains(p) && point_in_closed_polygon(p, scene.buildings[i].footprint)) return true;
    }
    return false;
  };

  const auto sources = scene_sources(scene, cfg);
  const PropagationContext ctx(scene.buildings, scene.greens, cfg);

  std::atomic<std::size_t> next_row{0};
  std::atomic<bool> timed_out{false};
  const auto work = [&] {
    for (std::size_t r; (r = next_row.fetch_add(1)) < grid.rows;) {
      if (options.deadline && std::chrono::steady_clock::now() > *options.deadline) {
        timed_out = true;
        return;
      }
      for (std::size_t c = 0; c < grid.cols; ++c) {
        const Vec2 p = grid.cell_center(r, c);
        if (inside_building(p)) {
          grid.mask[r * grid.cols + c] = CellState::InsideBuilding;
          continue;
        }
        grid.at(r, c) = sources.empty() ? kQuietFloorDb : ctx.level({p.x, p.y, cfg.receiver_height}, sources);
      }
    }
  };

  unsigned workers = options.workers ? options.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(1, grid.rows)));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(work);
  }
  if (timed_out) throw TimeoutError("simulate_grid: time budget exceeded");
  return grid;
}

NoiseGrid fill_masked(const NoiseGrid& grid) {
  std::vector<std::size_t> open;
  for (std::size_t i = 0; i < grid.mask.size(); ++i) {
    if (grid.mask[i] == CellState::Open) open.push_back(i);
  }
  if (open.empty()) throw DomainError("fill_masked: grid has no open cells");
  NoiseGrid out = grid;
  for (std::size_t i = 0; i < grid.mask.size(); ++i) {
    if (grid.mask[i] == CellState::Open) continue;
    const auto r = static_cast<std::int64_t>(i / grid.cols), c = static_cast<std::int64_t>(i % grid.cols);
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    std::size_t best_idx = open.front();
    // `open` is in row-major order, so the first strict minimum honours the tie rule.
    for (std::size_t j : open) {
      const auto dr = static_cast<std::int64_t>(j / grid.cols) - r;
      const auto dc = static_cast<std::int64_t>(j % grid.cols) - c;
      const std::int64_t d2 = dr * dr + dc * dc;
      if (d2 < best) {
        best = d2;
        best_idx = j;
      }
    }
    out.values[i] = grid.values[best_idx];
  }
  return out;
}

}  // namespace noisemap
