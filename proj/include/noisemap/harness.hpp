#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "noisemap/acoustics.hpp"
#include "noisemap/metrics.hpp"
#include "noisemap/scene.hpp"
#include "noisemap/surrogate.hpp"

namespace noisemap {

// ---------------------------------------------------------------------------
// Job configuration

struct JobConfig {
  std::size_t n = 400;
  std::uint64_t seed = 0;
  double split_ratio = 0.8;
  std::size_t image_size = 128;
  GenerationConfig generation;
  PropagationConfig propagation;
  TrainConfig train;
  /// Dataset root; NOISEMAP_DATA_ROOT is used when empty.
  std::filesystem::path data_root;
  /// Training and evaluation outputs.
  std::filesystem::path run_root;
  /// Parallel samples during build_dataset; 0 picks the hardware concurrency.
  unsigned workers = 0;
};

/// Defaults with train.image_size following image_size.
JobConfig default_job_config();

/// Throws ConfigError: n >= 2, 0 < split_ratio < 1, supported image size,
/// train.image_size == image_size, plus the nested checks.
void check_job_config(const JobConfig& cfg);

/// Reads a JSON object; absent keys keep their defaults. Throws ParseError.
JobConfig parse_job_config(std::string_view text, JobConfig base = default_job_config());
JobConfig load_job_config(const std::filesystem::path& path, JobConfig base = default_job_config());
std::string job_config_json(const JobConfig& cfg);

/// data_root, else $NOISEMAP_DATA_ROOT, else "data".
std::filesystem::path resolve_data_root(const JobConfig& cfg);

/// Hex SHA-256 of the canonical text of everything that shapes the dataset
/// (n, seed, image size, generation and propagation settings).
std::string generation_hash(const JobConfig& cfg);

std::string sha256_hex(std::string_view bytes);

// ---------------------------------------------------------------------------
// Dataset

enum class Split { Train, Val };
std::string_view to_string(Split s);

struct ManifestEntry {
  std::string id;
  std::uint64_t seed = 0;
  std::string scene, plan, noise, grid;  // relative to the dataset root
  std::string plan_sha256, noise_sha256;
  Split split = Split::Train;
};

inline constexpr int kManifestVersion = 1;

struct DatasetManifest {
  int version = kManifestVersion;
  std::string config_hash;
  std::uint64_t seed = 0;
  double split_ratio = 0.8;
  std::uint64_t split_seed = 0;
  std::size_t image_size = 0;
  std::vector<ManifestEntry> entries;

  std::size_t count(Split s) const;
};

/// Seed of sample i.
std::uint64_t sample_seed(std::uint64_t base, std::size_t index);

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

/// Per sample: generate, simulate, fill, encode, write. The manifest is
/// written last, so its presence marks a complete dataset. Output bytes do
/// not depend on the worker count.
DatasetManifest build_dataset(const JobConfig& cfg, const std::filesystem::path& root,
                              const ProgressFn& progress = {});

/// Shuffles ids with `seed` and assigns round(n * ratio) to training. Throws
/// ConfigError for a ratio outside (0, 1) and InputError when a side is empty.
DatasetManifest split(DatasetManifest manifest, double ratio, std::uint64_t seed);

inline constexpr const char* kManifestFile = "manifest.json";

std::string manifest_json(const DatasetManifest& manifest);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& root);
/// Throws IoError when absent (incomplete dataset) and ParseError when malformed.
DatasetManifest read_manifest(const std::filesystem::path& root);
/// SHA-256 of the manifest text as written.
std::string manifest_hash(const DatasetManifest& manifest);

/// Missing files and hash mismatches, one message each.
std::vector<std::string> verify_dataset(const DatasetManifest& manifest, const std::filesystem::path& root);

struct CleanReport {
  bool complete = false;                      // a manifest was present
  std::vector<std::filesystem::path> flagged;  // files not backed by the manifest
  bool removed = false;
};

/// Flags sample files that no manifest entry references (all of them when the
/// manifest is missing) and deletes them unless `dry_run`.
CleanReport clean_dataset(const std::filesystem::path& root, bool dry_run);

std::vector<ImagePair> load_pairs(const DatasetManifest& manifest, const std::filesystem::path& root, Split split);
std::vector<EvalSample> load_eval_samples(const DatasetManifest& manifest, const std::filesystem::path& root,
                                          Split split);

// ---------------------------------------------------------------------------
// Scene-level prediction and simulation

/// encode_plan at the model's size followed by predict.
RgbImage predict_scene(Surrogate& model, const CityScene& scene);

/// simulate_grid, fill_masked, encode_noise.
RgbImage simulate_scene(const CityScene& scene, const PropagationConfig& cfg, std::size_t px,
                        const SimulationOptions& options = {});

struct LevelStats {
  double min = 0.0, mean = 0.0, max = 0.0;
  std::size_t pixels = 0;
};

/// Decoded dB over pixels outside building footprints (all pixels when every
/// pixel is covered).
LevelStats noise_stats(const RgbImage& noise, const CityScene& scene);

// ---------------------------------------------------------------------------
// Evaluation

struct EvaluationJob {
  std::filesystem::path data_root;
  std::filesystem::path out_dir;
  std::size_t worst_k = 5;
  /// Validation scenes re-simulated to compare simulate and predict timing.
  std::size_t timing_samples = 5;
  PropagationConfig propagation;
};

/// evaluate() over the validation split plus the timing comparison; writes
/// the report into out_dir.
EvalReport run_evaluation(Surrogate& model, const EvaluationJob& job);

// ---------------------------------------------------------------------------
// HTTP service

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 binds an ephemeral port
  std::chrono::milliseconds simulate_budget{10000};
  /// Concurrent /api/simulate computations; further requests wait within their budget.
  unsigned simulate_slots = 2;
  /// Threads per simulation; 0 picks the hardware concurrency.
  unsigned simulate_workers = 0;
  PropagationConfig propagation;
  std::size_t max_body_bytes = 8u << 20;
  /// Served at / when set (the studio build).
  std::filesystem::path static_dir;
};

class Service {
 public:
  Service(Surrogate model, ServiceConfig cfg);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and returns the port. Throws IoError when binding fails.
  int bind();
  /// Serves until stop(); call after bind().
  void run();
  /// bind() + run() on a background thread.
  int start();
  void stop();
  int port() const;

  /// Replaces the model under the write lock.
  void swap_model(Surrogate model);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace noisemap
