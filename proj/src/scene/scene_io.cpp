#include <json.hpp>

#include "noisemap/errors.hpp"
#include "noisemap/scene.hpp"

namespace noisemap {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

const json& field(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path + "." + key, "missing required field");
  return *it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ParseError(path, "expected a number");
  return j.get<double>();
}

std::vector<Vec2> points(const json& j, const std::string& path) {
  if (!j.is_array()) throw ParseError(path, "expected an array of [x,y] pairs");
  std::vector<Vec2> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    const auto& pt = j[i];
    if (!pt.is_array() || pt.size() != 2) throw ParseError(p, "expected [x,y]");
    out.push_back({number(pt[0], p + "[0]"), number(pt[1], p + "[1]")});
  }
  return out;
}

// Absent lists read as empty.
const json& array_field(const json& obj, const char* key, const std::string& path) {
  static const json empty = json::array();
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return empty;
  if (!it->is_array()) throw ParseError(path + "." + key, "expected an array");
  return *it;
}

ordered_json points_json(std::span<const Vec2> pts) {
  auto arr = ordered_json::array();
  for (const auto& p : pts) arr.push_back(ordered_json::array({p.x, p.y}));
  return arr;
}

}  // namespace

CityScene parse_scene(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("$", std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("$", "expected an object");

  CityScene scene;
  scene.extent_m = number(field(doc, "extent_m", "$"), "$.extent_m");
  if (auto it = doc.find("seed"); it != doc.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw ParseError("$.seed", "expected an integer");
    scene.seed = it->get<std::int64_t>();
  }

  const auto& buildings = array_field(doc, "buildings", "$");
  for (std::size_t i = 0; i < buildings.size(); ++i) {
    const std::string p = "$.buildings[" + std::to_string(i) + "]";
    const auto& b = buildings[i];
    if (!b.is_object()) throw ParseError(p, "expected an object");
    scene.buildings.push_back({points(field(b, "footprint", p), p + ".footprint"),
                               number(field(b, "height", p), p + ".height")});
  }

  const auto& roads = array_field(doc, "roads", "$");
  for (std::size_t i = 0; i < roads.size(); ++i) {
    const std::string p = "$.roads[" + std::to_string(i) + "]";
    const auto& r = roads[i];
    if (!r.is_object()) throw ParseError(p, "expected an object");
    Road road;
    road.centerline = points(field(r, "centerline", p), p + ".centerline");
    const auto& cls = field(r, "class", p);
    if (!cls.is_string()) throw ParseError(p + ".class", "expected a string");
    const auto parsed = road_class_from_string(cls.get<std::string>());
    if (!parsed) throw ParseError(p + ".class", "unknown road class '" + cls.get<std::string>() + "'");
    road.road_class = *parsed;
    road.traffic = traffic_defaults(road.road_class);
    if (auto it = r.find("traffic"); it != r.end() && !it->is_null()) {
      const std::string tp = p + ".traffic";
      if (!it->is_object()) throw ParseError(tp, "expected an object");
      road.traffic.v_light = number(field(*it, "v_light", tp), tp + ".v_light");
      road.traffic.v_heavy = number(field(*it, "v_heavy", tp), tp + ".v_heavy");
      road.traffic.flow_q = number(field(*it, "flow_q", tp), tp + ".flow_q");
      road.traffic.heavy_fraction = number(field(*it, "heavy_fraction", tp), tp + ".heavy_fraction");
      if (auto lanes = it->find("lanes_desc"); lanes != it->end() && lanes->is_string()) {
        road.traffic.lanes_desc = lanes->get<std::string>();
      }
    }
    scene.roads.push_back(std::move(road));
  }

  const auto& greens = array_field(doc, "greens", "$");
  for (std::size_t i = 0; i < greens.size(); ++i) {
    const std::string p = "$.greens[" + std::to_string(i) + "]";
    if (!greens[i].is_object()) throw ParseError(p, "expected an object");
    scene.greens.push_back({points(field(greens[i], "polygon", p), p + ".polygon")});
  }
  return scene;
}

CityScene import_scene(std::string_view text) {
  CityScene scene = parse_scene(text);
  require_valid(scene);
  return scene;
}

std::string export_scene(const CityScene& scene) {
  ordered_json doc;
  doc["extent_m"] = scene.extent_m;
  if (scene.seed) doc["seed"] = *scene.seed;
  auto buildings = ordered_json::array();
  for (const auto& b : scene.buildings) {
    ordered_json jb;
    jb["footprint"] = points_json(b.footprint);
    jb["height"] = b.height;
    buildings.push_back(std::move(jb));
  }
  doc["buildings"] = std::move(buildings);
  auto roads = ordered_json::array();
  for (const auto& r : scene.roads) {
    ordered_json jr;
    jr["centerline"] = points_json(r.centerline);
    jr["class"] = std::string(to_string(r.road_class));
    ordered_json t;
    t["v_light"] = r.traffic.v_light;
    t["v_heavy"] = r.traffic.v_heavy;
    t["flow_q"] = r.traffic.flow_q;
    t["heavy_fraction"] = r.traffic.heavy_fraction;
    t["lanes_desc"] = r.traffic.lanes_desc;
    jr["traffic"] = std::move(t);
    roads.push_back(std::move(jr));
  }
  doc["roads"] = std::move(roads);
  auto greens = ordered_json::array();
  for (const auto& g : scene.greens) {
    ordered_json jg;
    jg["polygon"] = points_json(g.polygon);
    greens.push_back(std::move(jg));
  }
  doc["greens"] = std::move(greens);
  return doc.dump() + "\n";
}

}  // namespace noisemap
