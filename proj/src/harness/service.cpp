#include <chrono>
#include <cstdio>
#include <mutex>
#include <semaphore>
#include <shared_mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "noisemap/errors.hpp"
#include "noisemap/harness.hpp"
#include "noisemap/raster.hpp"

namespace noisemap {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

constexpr const char* kJson = "application/json";

ordered_json rgb_json(Rgb c) { return ordered_json::array({c.r, c.g, c.b}); }

ordered_json palette_json() {
  ordered_json anchors = ordered_json::array();
  for (const auto& a : kNoiseAnchors) anchors.push_back({{"db", a.db}, {"color", rgb_json(a.color)}});
  ordered_json roads = ordered_json::object();
  for (RoadClass c : kRoadClasses) {
    roads[std::string(to_string(c))] = {{"color", rgb_json(road_color(c))}, {"width_m", road_width_m(c)}};
  }
  ordered_json j;
  j["noise"] = {{"min_db", kNoiseMinDb}, {"max_db", kNoiseMaxDb}, {"anchors", std::move(anchors)}};
  j["plan"] = {{"background", rgb_json(kPlanBackground)},
               {"green", rgb_json(kPlanGreen)},
               {"roads", std::move(roads)},
               {"building", {{"gray_at_15m", kBuildingGrayLight}, {"gray_at_30m", kBuildingGrayDark}}}};
  return j;
}

ordered_json violation_json(const Violation& v) {
  return {{"kind", std::string(to_string(v.kind))}, {"index", v.index}, {"reason", v.reason}};
}

std::string stats_header(const LevelStats& s) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "{\"min\":%.3f,\"mean\":%.3f,\"max\":%.3f}", s.min, s.mean, s.max);
  return buf;
}

std::string ms_header(Clock::time_point t0) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
  return buf;
}

void send_json(httplib::Response& res, int status, const ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

// Result of reading a request body as a scene.
struct SceneRequest {
  std::optional<CityScene> scene;
  ordered_json violations = ordered_json::array();
  bool malformed_json = false;
};

SceneRequest read_scene(const std::string& body) {
  SceneRequest out;
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    out.malformed_json = true;
    out.violations.push_back({{"kind", "scene"}, {"index", 0}, {"path", "$"}, {"reason", e.what()}});
    return out;
  }
  // Accept {"scene": {...}} as well as a bare scene document.
  const json& scene_doc = doc.is_object() && doc.contains("scene") && doc["scene"].is_object() ? doc["scene"] : doc;
  CityScene scene;
  try {
    scene = parse_scene(scene_doc.dump());
  } catch (const ParseError& e) {
    out.violations.push_back({{"kind", "scene"}, {"index", 0}, {"path", e.path()}, {"reason", e.what()}});
    return out;
  }
  for (const auto& v : validate_scene(scene)) out.violations.push_back(violation_json(v));
  const double expected = CityScene{}.extent_m;
  if (scene.extent_m != expected) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "extent %.6g m differs from the model extent %.6g m", scene.extent_m, expected);
    out.violations.push_back({{"kind", "scene"}, {"index", 0}, {"reason", buf}});
  }
  if (out.violations.empty()) out.scene = std::move(scene);
  return out;
}

}  // namespace

struct Service::Impl {
  Impl(Surrogate m, ServiceConfig c) : model(std::move(m)), cfg(std::move(c)), slots(std::max(1u, cfg.simulate_slots)) {}

  Surrogate model;
  std::shared_mutex model_mu;
  ServiceConfig cfg;
  std::counting_semaphore<1024> slots;
  httplib::Server server;
  int port = -1;
  std::thread thread;

  // Returns the scene, or fills `res` with the error response.
  std::optional<CityScene> scene_or_error(const httplib::Request& req, httplib::Response& res) {
    SceneRequest r = read_scene(req.body);
    if (!r.scene) {
      send_json(res, 422, {{"error", "invalid scene"}, {"violations", std::move(r.violations)}});
      return std::nullopt;
    }
    return r.scene;
  }

  void routes() {
    server.set_payload_max_length(cfg.max_body_bytes);
    // SO_REUSEADDR only: a second server must not share a live port.
    server.set_socket_options([](socket_t sock) {
      int yes = 1;
      ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
    });

    server.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) {
      std::shared_lock lock(model_mu);
      send_json(res, 200, {{"status", "ok"}, {"model", {{"image_size", model.image_size()}, {"epoch", model.epoch}}}});
    });

    server.Get("/api/palette",
               [](const httplib::Request&, httplib::Response& res) { send_json(res, 200, palette_json()); });

    server.Post("/api/validate", [](const httplib::Request& req, httplib::Response& res) {
      SceneRequest r = read_scene(req.body);
      if (r.malformed_json) {
        send_json(res, 422, {{"error", "invalid scene"}, {"violations", std::move(r.violations)}});
        return;
      }
      send_json(res, 200, {{"valid", r.violations.empty()}, {"violations", std::move(r.violations)}});
    });

    server.Post("/api/predict", [this](const httplib::Request& req, httplib::Response& res) {
      const auto t0 = Clock::now();
      const auto scene = scene_or_error(req, res);
      if (!scene) return;
      RgbImage img;
      {
        std::shared_lock lock(model_mu);
        img = predict_scene(model, *scene);
      }
      res.set_header("X-Stats", stats_header(noise_stats(img, *scene)));
      res.set_header("X-Latency-Ms", ms_header(t0));
      res.set_content(encode_png(img), "image/png");
    });

    server.Post("/api/simulate", [this](const httplib::Request& req, httplib::Response& res) {
      const auto t0 = Clock::now();
      const auto scene = scene_or_error(req, res);
      if (!scene) return;
      const auto img = simulate(*scene, t0, res);
      if (!img) return;
      res.set_header("X-Stats", stats_header(noise_stats(*img, *scene)));
      res.set_header("X-Latency-Ms", ms_header(t0));
      res.set_content(encode_png(*img), "image/png");
    });

    // Error map between the simulated and predicted images of one scene.
    server.Post("/api/compare", [this](const httplib::Request& req, httplib::Response& res) {
      const auto t0 = Clock::now();
      const auto scene = scene_or_error(req, res);
      if (!scene) return;
      const auto truth = simulate(*scene, t0, res);
      if (!truth) return;
      RgbImage pred;
      {
        std::shared_lock lock(model_mu);
        pred = predict_scene(model, *scene);
      }
      const Field a = to_luma(*truth), b = to_luma(pred);
      char buf[128];
      std::snprintf(buf, sizeof(buf), "{\"mse\":%.17g,\"ssim\":%.17g}", mse(a, b), ssim(a, b));
      res.set_header("X-Metrics", buf);
      res.set_header("X-Latency-Ms", ms_header(t0));
      res.set_content(encode_png(error_map(*truth, pred)), "image/png");
    });

    server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });

    server.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Origin", "*");
      res.set_header("Access-Control-Expose-Headers", "X-Stats, X-Latency-Ms, X-Metrics");
    });

    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      std::string what = "internal error";
      int status = 500;
      try {
        std::rethrow_exception(ep);
      } catch (const InputError& e) {
        what = e.what();
        status = 422;
      } catch (const std::exception& e) {
        what = e.what();
      } catch (...) {
      }
      send_json(res, status, {{"error", what}});
    });

    if (!cfg.static_dir.empty() && !server.set_mount_point("/", cfg.static_dir.string())) {
      throw IoError("static directory not found: " + cfg.static_dir.string());
    }
  }

  // Oracle path under the time budget; fills a 504 response on timeout.
  std::optional<RgbImage> simulate(const CityScene& scene, Clock::time_point t0, httplib::Response& res) {
    const auto deadline = t0 + cfg.simulate_budget;
    const ordered_json timeout = {{"error", "simulation exceeded the time budget"}, {"partial", false}};
    if (!slots.try_acquire_until(deadline)) {
      send_json(res, 504, timeout);
      return std::nullopt;
    }
    std::size_t px;
    {
      std::shared_lock lock(model_mu);
      px = static_cast<std::size_t>(model.image_size());
    }
    try {
      SimulationOptions opt;
      opt.workers = cfg.simulate_workers;
      opt.deadline = deadline;
      RgbImage img = simulate_scene(scene, cfg.propagation, px, opt);
      slots.release();
      return img;
    } catch (const TimeoutError&) {
      slots.release();
      send_json(res, 504, timeout);
      return std::nullopt;
    } catch (...) {
      slots.release();
      throw;
    }
  }
};

Service::Service(Surrogate model, ServiceConfig cfg) : impl_(std::make_unique<Impl>(std::move(model), std::move(cfg))) {
  impl_->model.generator->eval();
  impl_->routes();
}

Service::~Service() { stop(); }

int Service::bind() {
  auto& i = *impl_;
  if (i.cfg.port == 0) {
    i.port = i.server.bind_to_any_port(i.cfg.host);
  } else {
    i.port = i.server.bind_to_port(i.cfg.host, i.cfg.port) ? i.cfg.port : -1;
  }
  if (i.port < 0) throw IoError("cannot bind " + i.cfg.host + ":" + std::to_string(i.cfg.port));
  return i.port;
}

void Service::run() { impl_->server.listen_after_bind(); }

int Service::start() {
  const int p = bind();
  impl_->thread = std::thread([this] { run(); });
  impl_->server.wait_until_ready();
  return p;
}

void Service::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

int Service::port() const { return impl_->port; }

void Service::swap_model(Surrogate model) {
  model.generator->eval();
  std::unique_lock lock(impl_->model_mu);
  impl_->model = std::move(model);
}

}  // namespace noisemap
