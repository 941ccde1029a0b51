#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

#include <json.hpp>

#include "noisemap/errors.hpp"
#include "noisemap/harness.hpp"
#include "noisemap/raster.hpp"
#include "noisemap/rng.hpp"

namespace noisemap {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kSampleDirs[] = {"scenes", "plans", "noise", "grids"};

std::string sample_id(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "s%05zu", i);
  return buf;
}

ManifestEntry build_sample(const JobConfig& cfg, const fs::path& root, std::size_t index) {
  ManifestEntry e;
  e.id = sample_id(index);
  e.seed = sample_seed(cfg.seed, index);
  e.scene = "scenes/" + e.id + ".json";
  e.plan = "plans/" + e.id + ".png";
  e.noise = "noise/" + e.id + ".png";
  e.grid = "grids/" + e.id + ".grid";

  CityScene scene = generate_scene(e.seed, cfg.generation);
  scene.seed = static_cast<std::int64_t>(e.seed);
  const NoiseGrid grid = simulate_grid(scene, cfg.propagation, {.workers = 1});
  const std::string plan = encode_png(encode_plan(scene, cfg.image_size));
  const std::string noise = encode_png(encode_noise(fill_masked(grid), cfg.image_size));
  e.plan_sha256 = sha256_hex(plan);
  e.noise_sha256 = sha256_hex(noise);

  write_file_atomic(root / e.scene, export_scene(scene));
  write_file_atomic(root / e.plan, plan);
  write_file_atomic(root / e.noise, noise);
  write_grid(grid, root / e.grid);
  return e;
}

Split split_from_string(const std::string& s, const std::string& path) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  throw ParseError(path, "unknown split '" + s + "'");
}

}  // namespace

std::string_view to_string(Split s) { return s == Split::Train ? "train" : "val"; }

std::size_t DatasetManifest::count(Split s) const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [s](const ManifestEntry& e) { return e.split == s; }));
}

std::uint64_t sample_seed(std::uint64_t base, std::size_t index) { return mix_seed(base, index); }

DatasetManifest build_dataset(const JobConfig& cfg, const fs::path& root, const ProgressFn& progress) {
  check_job_config(cfg);
  fs::create_directories(root);
  fs::remove(root / kManifestFile);
  for (const char* d : kSampleDirs) fs::create_directories(root / d);

  std::vector<ManifestEntry> entries(cfg.n);
  unsigned workers = cfg.workers ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, cfg.n));
  std::atomic<std::size_t> next{0}, done{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex mu;
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i; !failed && (i = next++) < cfg.n;) {
          try {
            entries[i] = build_sample(cfg, root, i);
          } catch (...) {
            std::lock_guard lock(mu);
            if (!error) error = std::current_exception();
            failed = true;
            return;
          }
          const std::size_t d = ++done;
          if (progress) {
            std::lock_guard lock(mu);
            progress(d, cfg.n);
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);

  DatasetManifest m;
  m.config_hash = generation_hash(cfg);
  m.seed = cfg.seed;
  m.image_size = cfg.image_size;
  m.entries = std::move(entries);
  m = split(std::move(m), cfg.split_ratio, cfg.seed);
  write_manifest(m, root);
  return m;
}

DatasetManifest split(DatasetManifest manifest, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split ratio must be in (0, 1)");
  const std::size_t n = manifest.entries.size();
  const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratio));
  if (n_train == 0 || n_train >= n) {
    throw InputError("split of " + std::to_string(n) + " samples at ratio " + std::to_string(ratio) +
                     " leaves one side empty");
  }
  std::sort(manifest.entries.begin(), manifest.entries.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.id < b.id; });
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(mix_seed(seed, 0x5b1));
  rng.shuffle(std::span<std::size_t>(order));
  for (std::size_t k = 0; k < n; ++k) manifest.entries[order[k]].split = k < n_train ? Split::Train : Split::Val;
  manifest.split_ratio = ratio;
  manifest.split_seed = seed;
  return manifest;
}

std::string manifest_json(const DatasetManifest& m) {
  ordered_json j;
  j["version"] = m.version;
  j["config_hash"] = m.config_hash;
  j["seed"] = m.seed;
  j["split_ratio"] = m.split_ratio;
  j["split_seed"] = m.split_seed;
  j["image_size"] = m.image_size;
  j["counts"] = {{"train", m.count(Split::Train)}, {"val", m.count(Split::Val)}};
  auto entries = ordered_json::array();
  for (const auto& e : m.entries) {
    entries.push_back({{"id", e.id},
                       {"seed", e.seed},
                       {"split", to_string(e.split)},
                       {"scene", e.scene},
                       {"plan", e.plan},
                       {"noise", e.noise},
                       {"grid", e.grid},
                       {"plan_sha256", e.plan_sha256},
                       {"noise_sha256", e.noise_sha256}});
  }
  j["entries"] = std::move(entries);
  return j.dump(2) + "\n";
}

void write_manifest(const DatasetManifest& manifest, const fs::path& root) {
  write_file_atomic(root / kManifestFile, manifest_json(manifest));
}

DatasetManifest read_manifest(const fs::path& root) {
  const fs::path path = root / kManifestFile;
  if (!fs::exists(path)) throw IoError(path.string() + " not found; the dataset is missing or incomplete");
  DatasetManifest m;
  try {
    const auto j = nlohmann::json::parse(read_file(path));
    m.version = j.at("version");
    if (m.version != kManifestVersion) {
      throw ParseError("$.version", "unsupported manifest version " + std::to_string(m.version));
    }
    m.config_hash = j.at("config_hash");
    m.seed = j.at("seed");
    m.split_ratio = j.at("split_ratio");
    m.split_seed = j.at("split_seed");
    m.image_size = j.at("image_size");
    const auto& entries = j.at("entries");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& x = entries[i];
      const std::string p = "$.entries[" + std::to_string(i) + "]";
      ManifestEntry e;
      e.id = x.at("id");
      if (!ids.insert(e.id).second) throw ParseError(p + ".id", "duplicate id " + e.id);
      e.seed = x.at("seed");
      e.split = split_from_string(x.at("split"), p + ".split");
      e.scene = x.at("scene");
      e.plan = x.at("plan");
      e.noise = x.at("noise");
      e.grid = x.at("grid");
      e.plan_sha256 = x.at("plan_sha256");
      e.noise_sha256 = x.at("noise_sha256");
      m.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("$", std::string("malformed manifest: ") + e.what());
  }
  return m;
}

std::string manifest_hash(const DatasetManifest& manifest) { return sha256_hex(manifest_json(manifest)); }

std::vector<std::string> verify_dataset(const DatasetManifest& manifest, const fs::path& root) {
  std::vector<std::string> problems;
  for (const auto& e : manifest.entries) {
    for (const auto* rel : {&e.scene, &e.plan, &e.noise, &e.grid}) {
      if (!fs::exists(root / *rel)) problems.push_back(e.id + ": missing " + *rel);
    }
    if (fs::exists(root / e.plan) && sha256_hex(read_file(root / e.plan)) != e.plan_sha256) {
      problems.push_back(e.id + ": plan hash mismatch");
    }
    if (fs::exists(root / e.noise) && sha256_hex(read_file(root / e.noise)) != e.noise_sha256) {
      problems.push_back(e.id + ": noise hash mismatch");
    }
  }
  return problems;
}

CleanReport clean_dataset(const fs::path& root, bool dry_run) {
  CleanReport report;
  std::set<fs::path> referenced;
  if (fs::exists(root / kManifestFile)) {
    report.complete = true;
    for (const auto& e : read_manifest(root).entries) {
      for (const auto* rel : {&e.scene, &e.plan, &e.noise, &e.grid}) referenced.insert((root / *rel).lexically_normal());
    }
  }
  for (const char* d : kSampleDirs) {
    if (!fs::is_directory(root / d)) continue;
    for (const auto& f : fs::directory_iterator(root / d)) {
      if (f.is_regular_file() && !referenced.contains(f.path().lexically_normal())) report.flagged.push_back(f.path());
    }
  }
  if (fs::is_directory(root)) {
    for (const auto& f : fs::directory_iterator(root)) {
      if (f.is_regular_file() && f.path().extension() == ".tmp") report.flagged.push_back(f.path());
    }
  }
  std::sort(report.flagged.begin(), report.flagged.end());
  if (!dry_run) {
    for (const auto& p : report.flagged) fs::remove(p);
    report.removed = true;
  }
  return report;
}

std::vector<ImagePair> load_pairs(const DatasetManifest& manifest, const fs::path& root, Split which) {
  std::vector<ImagePair> out;
  for (const auto& e : manifest.entries) {
    if (e.split != which) continue;
    out.push_back({e.id, to_tensor(read_png(root / e.plan)), to_tensor(read_png(root / e.noise))});
  }
  return out;
}

std::vector<EvalSample> load_eval_samples(const DatasetManifest& manifest, const fs::path& root, Split which) {
  std::vector<EvalSample> out;
  for (const auto& e : manifest.entries) {
    if (e.split != which) continue;
    out.push_back({e.id, read_png(root / e.plan), read_png(root / e.noise)});
  }
  return out;
}

}  // namespace noisemap
