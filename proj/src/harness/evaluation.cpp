#include <algorithm>
#include <chrono>
#include <limits>

#include "noisemap/errors.hpp"
#include "noisemap/harness.hpp"
#include "noisemap/raster.hpp"

namespace noisemap {

RgbImage predict_scene(Surrogate& model, const CityScene& scene) {
  return predict(model, encode_plan(scene, static_cast<std::size_t>(model.image_size())));
}

RgbImage simulate_scene(const CityScene& scene, const PropagationConfig& cfg, std::size_t px,
                        const SimulationOptions& options) {
  return encode_noise(fill_masked(simulate_grid(scene, cfg, options)), px);
}

LevelStats noise_stats(const RgbImage& noise, const CityScene& scene) {
  const Field levels = decode_noise(noise);
  const auto covered = building_pixel_mask(scene, noise.width);
  const bool all_covered = std::all_of(covered.begin(), covered.end(), [](bool b) { return b; });
  LevelStats s;
  s.min = std::numeric_limits<double>::infinity();
  s.max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (std::size_t i = 0; i < levels.data.size(); ++i) {
    if (covered[i] && !all_covered) continue;
    const double v = levels.data[i];
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
    sum += v;
    ++s.pixels;
  }
  s.mean = sum / static_cast<double>(s.pixels);
  return s;
}

EvalReport run_evaluation(Surrogate& model, const EvaluationJob& job) {
  const DatasetManifest manifest = read_manifest(job.data_root);
  if (manifest.image_size != static_cast<std::size_t>(model.image_size())) {
    throw InputError("dataset image size " + std::to_string(manifest.image_size) + " differs from model size " +
                     std::to_string(model.image_size()));
  }
  const auto samples = load_eval_samples(manifest, job.data_root, Split::Val);
  EvaluateOptions opt;
  opt.worst_k = job.worst_k;
  opt.out_dir = job.out_dir;
  EvalReport report = evaluate([&](const RgbImage& plan) { return predict(model, plan); }, samples, opt);

  // Timing comparison: full oracle path against the surrogate on the same scenes.
  double sim_ms = 0.0, pred_ms = 0.0;
  std::size_t timed = 0;
  for (const auto& e : manifest.entries) {
    if (e.split != Split::Val || timed >= job.timing_samples) continue;
    const CityScene scene = import_scene(read_file(job.data_root / e.scene));
    const auto t0 = std::chrono::steady_clock::now();
    simulate_grid(scene, job.propagation, {.workers = 1});
    const auto t1 = std::chrono::steady_clock::now();
    predict_scene(model, scene);
    const auto t2 = std::chrono::steady_clock::now();
    sim_ms += std::chrono::duration<double, std::milli>(t1 - t0).count();
    pred_ms += std::chrono::duration<double, std::milli>(t2 - t1).count();
    ++timed;
  }
  if (timed > 0) {
    report.simulate_ms = sim_ms / static_cast<double>(timed);
    report.predict_ms = pred_ms / static_cast<double>(timed);
  }
  // Rewritten so report.json carries the timing comparison.
  if (!job.out_dir.empty()) write_report(report, job.out_dir);
  return report;
}

}  // namespace noisemap
