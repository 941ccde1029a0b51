#include "noisemap/geometry.hpp"

#include <algorithm>
#include <limits>

namespace noisemap {

Box bounding_box(std::span<const Vec2> pts) {
  Box b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
        -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& p : pts) {
    b.min_x = std::min(b.min_x, p.x);
    b.min_y = std::min(b.min_y, p.y);
    b.max_x = std::max(b.max_x, p.x);
    b.max_y = std::max(b.max_y, p.y);
  }
  return b;
}

double signed_area(std::span<const Vec2> ring) {
  double twice = 0.0;
  for (std::size_t i = 0, n = ring.size(); i < n; ++i) twice += cross(ring[i], ring[(i + 1) % n]);
  return 0.5 * twice;
}

double polyline_length(std::span<const Vec2> line) {
  double len = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) len += distance(line[i - 1], line[i]);
  return len;
}

namespace {

int orientation(Vec2 a, Vec2 b, Vec2 c) {
  const double v = cross(b - a, c - a);
  return (v > 0.0) - (v < 0.0);
}

bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

bool segments_touch(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const int o1 = orientation(a, b, c), o2 = orientation(a, b, d);
  const int o3 = orientation(c, d, a), o4 = orientation(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

}  // namespace

bool is_simple(std::span<const Vec2> ring) {
  const std::size_t n = ring.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    if (ring[i] == ring[(i + 1) % n]) return false;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = ring[i], b = ring[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const Vec2 c = ring[j], d = ring[(j + 1) % n];
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) {
        // Shared vertex is expected; a fold-back (collinear overlap) is not.
        const Vec2 shared = (j == i + 1) ? b : a;
        const Vec2 p = (j == i + 1) ? a : b;
        const Vec2 q = (j == i + 1) ? d : c;
        if (orientation(p, shared, q) == 0 && dot(p - shared, q - shared) > 0.0) return false;
        continue;
      }
      if (segments_touch(a, b, c, d)) return false;
    }
  }
  return true;
}

bool point_in_polygon(Vec2 p, std::span<const Vec2> ring) {
  bool inside = false;
  for (std::size_t i = 0, n = ring.size(), j = n - 1; i < n; j = i++) {
    const Vec2 a = ring[i], b = ring[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

bool point_on_boundary(Vec2 p, std::span<const Vec2> ring) {
  for (std::size_t i = 0, n = ring.size(), j = n - 1; i < n; j = i++) {
    const Vec2 a = ring[j], b = ring[i];
    if (cross(b - a, p - a) != 0.0) continue;
    if (p.x >= std::min(a.x, b.x) && p.x <= std::max(a.x, b.x) && p.y >= std::min(a.y, b.y) &&
        p.y <= std::max(a.y, b.y)) {
      return true;
    }
  }
  return false;
}

bool point_in_closed_polygon(Vec2 p, std::span<const Vec2> ring) {
  return point_on_boundary(p, ring) || point_in_polygon(p, ring);
}

std::vector<double> segment_ring_crossings(Vec2 a, Vec2 b, std::span<const Vec2> ring) {
  std::vector<double> ts;
  const Vec2 r = b - a;
  for (std::size_t i = 0, n = ring.size(); i < n; ++i) {
    const Vec2 p = ring[i];
    const Vec2 s = ring[(i + 1) % n] - p;
    const double denom = cross(r, s);
    if (denom == 0.0) continue;
    const Vec2 ap = p - a;
    const double t = cross(ap, s) / denom;
    const double u = cross(ap, r) / denom;
    if (t >= 0.0 && t <= 1.0 && u >= 0.0 && u < 1.0) ts.push_back(t);
  }
  std::sort(ts.begin(), ts.end());
  return ts;
}

double segment_length_inside(Vec2 a, Vec2 b, std::span<const Vec2> ring) {
  auto ts = segment_ring_crossings(a, b, ring);
  ts.insert(ts.begin(), 0.0);
  ts.push_back(1.0);
  const double len = distance(a, b);
  double inside = 0.0;
  for (std::size_t i = 1; i < ts.size(); ++i) {
    const double dt = ts[i] - ts[i - 1];
    if (dt <= 0.0) continue;
    const double tm = 0.5 * (ts[i] + ts[i - 1]);
    if (point_in_polygon(a + tm * (b - a), ring)) inside += dt * len;
  }
  return inside;
}

Polygon clip_polygon(std::span<const Vec2> ring, const Box& box) {
  Polygon out(ring.begin(), ring.end());
  // Each clip plane: keep points where f(p) >= 0.
  const auto clip = [&out](auto&& f, auto&& intersect) {
    if (out.empty()) return;
    Polygon in;
    in.swap(out);
    for (std::size_t i = 0, n = in.size(); i < n; ++i) {
      const Vec2 cur = in[i], prev = in[(i + n - 1) % n];
      const bool cur_in = f(cur) >= 0.0, prev_in = f(prev) >= 0.0;
      if (cur_in) {
        if (!prev_in) out.push_back(intersect(prev, cur));
        out.push_back(cur);
      } else if (prev_in) {
        out.push_back(intersect(prev, cur));
      }
    }
  };
  const auto at_x = [](double x) {
    return [x](Vec2 p, Vec2 q) { return Vec2{x, p.y + (q.y - p.y) * (x - p.x) / (q.x - p.x)}; };
  };
  const auto at_y = [](double y) {
    return [y](Vec2 p, Vec2 q) { return Vec2{p.x + (q.x - p.x) * (y - p.y) / (q.y - p.y), y}; };
  };
  clip([&](Vec2 p) { return p.x - box.min_x; }, at_x(box.min_x));
  clip([&](Vec2 p) { return box.max_x - p.x; }, at_x(box.max_x));
  clip([&](Vec2 p) { return p.y - box.min_y; }, at_y(box.min_y));
  clip([&](Vec2 p) { return box.max_y - p.y; }, at_y(box.max_y));

  Polygon dedup;
  for (const auto& p : out) {
    if (dedup.empty() || !(dedup.back() == p)) dedup.push_back(p);
  }
  while (dedup.size() > 1 && dedup.front() == dedup.back()) dedup.pop_back();
  return dedup;
}

std::vector<Polyline> clip_polyline(std::span<const Vec2> line, const Box& box) {
  std::vector<Polyline> pieces;
  bool open = false;
  for (std::size_t i = 1; i < line.size(); ++i) {
    const Vec2 a = line[i - 1], d = line[i] - line[i - 1];
    double t0 = 0.0, t1 = 1.0;
    const double p[4] = {-d.x, d.x, -d.y, d.y};
    const double q[4] = {a.x - box.min_x, box.max_x - a.x, a.y - box.min_y, box.max_y - a.y};
    bool visible = true;
    for (int k = 0; k < 4 && visible; ++k) {
      if (p[k] == 0.0) {
        if (q[k] < 0.0) visible = false;
      } else {
        const double t = q[k] / p[k];
        if (p[k] < 0.0) {
          t0 = std::max(t0, t);
        } else {
          t1 = std::min(t1, t);
        }
        if (t0 > t1) visible = false;
      }
    }
    if (!visible || t1 <= t0) {
      open = false;
      continue;
    }
    const Vec2 start = t0 == 0.0 ? a : a + t0 * d;
    const Vec2 end = t1 == 1.0 ? line[i] : a + t1 * d;
    if (!(open && t0 == 0.0)) {
      pieces.push_back({start});
    }
    pieces.back().push_back(end);
    open = (t1 == 1.0);
  }
  std::erase_if(pieces, [](const Polyline& pl) { return pl.size() < 2 || polyline_length(pl) <= 0.0; });
  return pieces;
}

}  // namespace noisemap
