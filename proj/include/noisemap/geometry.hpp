#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace noisemap {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2, Vec2) = default;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec2 xy() const { return {x, y}; }
  friend bool operator==(Vec3, Vec3) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double length(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return length(b - a); }
inline double distance(Vec3 a, Vec3 b) {
  const double dx = b.x - a.x, dy = b.y - a.y, dz = b.z - a.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// Closed ring; the first vertex is not repeated at the end.
using Polygon = std::vector<Vec2>;
using Polyline = std::vector<Vec2>;

struct Box {
  double min_x, min_y, max_x, max_y;

  bool overlaps(const Box& o) const {
    return min_x <= o.max_x && o.min_x <= max_x && min_y <= o.max_y && o.min_y <= max_y;
  }
  bool contains(Vec2 p) const { return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y; }
};

Box bounding_box(std::span<const Vec2> pts);

/// Positive for counter-clockwise rings.
double signed_area(std::span<const Vec2> ring);
double polyline_length(std::span<const Vec2> line);

/// True when no two non-adjacent edges touch and adjacent edges only share
/// their common vertex. Rings with fewer than 3 vertices are not simple.
bool is_simple(std::span<const Vec2> ring);

/// Even-odd rule; points exactly on the boundary may go either way.
bool point_in_polygon(Vec2 p, std::span<const Vec2> ring);

/// True when p lies on an edge of the ring (exact test).
bool point_on_boundary(Vec2 p, std::span<const Vec2> ring);

/// Closed test: boundary points count as inside, so the result does not
/// depend on the ring's orientation in the plane.
bool point_in_closed_polygon(Vec2 p, std::span<const Vec2> ring);

/// Parameters t in [0,1] along a->b where the segment crosses ring edges,
/// sorted ascending. Collinear overlaps contribute nothing.
std::vector<double> segment_ring_crossings(Vec2 a, Vec2 b, std::span<const Vec2> ring);

/// Length of the part of segment a->b lying inside the ring.
double segment_length_inside(Vec2 a, Vec2 b, std::span<const Vec2> ring);

/// Sutherland-Hodgman against an axis-aligned box. May return an empty ring.
Polygon clip_polygon(std::span<const Vec2> ring, const Box& box);

/// Liang-Barsky per edge; consecutive in-box pieces are joined, so the result
/// is one polyline per contiguous run inside the box.
std::vector<Polyline> clip_polyline(std::span<const Vec2> line, const Box& box);

}  // namespace noisemap
