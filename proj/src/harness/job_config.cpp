#include <cstdlib>
#include <map>

#include <json.hpp>
#include <openssl/evp.h>

#include "noisemap/errors.hpp"
#include "noisemap/harness.hpp"
#include "noisemap/raster.hpp"

namespace noisemap {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// Assigns known keys of `obj` and rejects the rest.
class Fields {
 public:
  Fields(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ParseError(path_, "expected an object");
  }

  template <typename T>
  Fields& opt(const char* key, T& out) {
    seen_.emplace(key, true);
    const auto it = obj_.find(key);
    if (it == obj_.end()) return *this;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ParseError(path_ + "." + key, "expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw ParseError(path_ + "." + key, "expected an integer");
        if (std::is_unsigned_v<T> && it->is_number_integer() && !it->is_number_unsigned()) {
          throw ParseError(path_ + "." + key, "expected a non-negative integer");
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw ParseError(path_ + "." + key, "expected a number");
      }
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw ParseError(path_ + "." + key, e.what());
    }
    return *this;
  }

  Fields& path(const char* key, std::filesystem::path& out) {
    std::string s = out.string();
    opt(key, s);
    out = s;
    return *this;
  }

  Fields& object(const char* key, const std::function<void(Fields&)>& fn) {
    seen_.emplace(key, true);
    const auto it = obj_.find(key);
    if (it == obj_.end()) return *this;
    Fields sub(*it, path_ + "." + key);
    fn(sub);
    sub.finish();
    return *this;
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.contains(key)) throw ParseError(path_ + "." + key, "unknown key");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::map<std::string, bool> seen_;
};

}  // namespace

JobConfig default_job_config() {
  JobConfig cfg;
  cfg.train.image_size = static_cast<std::int64_t>(cfg.image_size);
  return cfg;
}

void check_job_config(const JobConfig& cfg) {
  if (cfg.n < 2) throw ConfigError("job config: n must be >= 2");
  if (!(cfg.split_ratio > 0.0 && cfg.split_ratio < 1.0)) throw ConfigError("job config: split_ratio must be in (0, 1)");
  if (!is_supported_image_size(cfg.image_size)) {
    throw ConfigError("job config: image_size must be 128 or 256");
  }
  if (static_cast<std::size_t>(cfg.train.image_size) != cfg.image_size) {
    throw ConfigError("job config: train.image_size differs from image_size");
  }
  check_generation_config(cfg.generation);
  check_propagation_config(cfg.propagation);
  check_train_config(cfg.train);
}

JobConfig parse_job_config(std::string_view text, JobConfig base) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("$", std::string("invalid JSON: ") + e.what());
  }
  JobConfig cfg = std::move(base);
  bool train_size_given = false;
  Fields root(doc, "$");
  root.opt("n", cfg.n)
      .opt("seed", cfg.seed)
      .opt("split_ratio", cfg.split_ratio)
      .opt("image_size", cfg.image_size)
      .opt("workers", cfg.workers)
      .path("data_root", cfg.data_root)
      .path("run_root", cfg.run_root)
      .object("generation",
              [&](Fields& f) {
                auto& g = cfg.generation;
                f.opt("extent_m", g.extent_m)
                    .opt("building_count_range", g.building_count_range)
                    .opt("height_range_m", g.height_range_m)
                    .opt("road_spacing_range_m", g.road_spacing_range_m)
                    .opt("green_probability", g.green_probability)
                    .opt("crop_margin_m", g.crop_margin_m);
              })
      .object("propagation",
              [&](Fields& f) {
                auto& p = cfg.propagation;
                f.opt("receiver_height", p.receiver_height)
                    .opt("source_height", p.source_height)
                    .opt("grid_spacing", p.grid_spacing)
                    .opt("rep_frequency", p.rep_frequency)
                    .opt("sound_speed", p.sound_speed)
                    .opt("barrier_cap", p.barrier_cap)
                    .opt("lumped_absorption", p.lumped_absorption)
                    .opt("green_rate", p.green_rate)
                    .opt("green_cap", p.green_cap)
                    .opt("segment_len", p.segment_len);
              })
      .object("train", [&](Fields& f) {
        auto& t = cfg.train;
        f.opt("lambda_l1", t.lambda_l1)
            .opt("learning_rate", t.learning_rate)
            .opt("beta1", t.beta1)
            .opt("beta2", t.beta2)
            .opt("batch_size", t.batch_size)
            .opt("epochs", t.epochs)
            .opt("seed", t.seed)
            .opt("augment", t.augment)
            .opt("checkpoint_every", t.checkpoint_every)
            .opt("threads", t.threads);
        f.opt("image_size", t.image_size);
        train_size_given = doc.at("train").contains("image_size");
      });
  root.finish();
  if (!train_size_given) cfg.train.image_size = static_cast<std::int64_t>(cfg.image_size);
  return cfg;
}

JobConfig load_job_config(const std::filesystem::path& path, JobConfig base) {
  return parse_job_config(read_file(path), std::move(base));
}

namespace {

ordered_json generation_block(const JobConfig& cfg) {
  const auto& g = cfg.generation;
  const auto& p = cfg.propagation;
  ordered_json j;
  j["n"] = cfg.n;
  j["seed"] = cfg.seed;
  j["image_size"] = cfg.image_size;
  j["generation"] = {{"extent_m", g.extent_m},
                     {"building_count_range", g.building_count_range},
                     {"height_range_m", g.height_range_m},
                     {"road_spacing_range_m", g.road_spacing_range_m},
                     {"green_probability", g.green_probability},
                     {"crop_margin_m", g.crop_margin_m}};
  j["propagation"] = {{"receiver_height", p.receiver_height}, {"source_height", p.source_height},
                      {"grid_spacing", p.grid_spacing},       {"rep_frequency", p.rep_frequency},
                      {"sound_speed", p.sound_speed},         {"barrier_cap", p.barrier_cap},
                      {"lumped_absorption", p.lumped_absorption}, {"green_rate", p.green_rate},
                      {"green_cap", p.green_cap},             {"segment_len", p.segment_len}};
  return j;
}

}  // namespace

std::string job_config_json(const JobConfig& cfg) {
  ordered_json j = generation_block(cfg);
  j["split_ratio"] = cfg.split_ratio;
  j["workers"] = cfg.workers;
  j["data_root"] = cfg.data_root.string();
  j["run_root"] = cfg.run_root.string();
  const auto& t = cfg.train;
  j["train"] = {{"lambda_l1", t.lambda_l1},   {"learning_rate", t.learning_rate},
                {"beta1", t.beta1},           {"beta2", t.beta2},
                {"batch_size", t.batch_size}, {"epochs", t.epochs},
                {"seed", t.seed},             {"image_size", t.image_size},
                {"augment", t.augment},       {"checkpoint_every", t.checkpoint_every},
                {"threads", t.threads}};
  return j.dump(2) + "\n";
}

std::filesystem::path resolve_data_root(const JobConfig& cfg) {
  if (!cfg.data_root.empty()) return cfg.data_root;
  if (const char* env = std::getenv("NOISEMAP_DATA_ROOT"); env && *env) return env;
  return "data";
}

std::string generation_hash(const JobConfig& cfg) { return sha256_hex(generation_block(cfg).dump()); }

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 15];
  }
  return out;
}

}  // namespace noisemap
