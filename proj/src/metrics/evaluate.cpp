#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "noisemap/errors.hpp"
#include "noisemap/metrics.hpp"
#include "noisemap/raster.hpp"

namespace noisemap {

std::vector<std::size_t> worst_order(const std::vector<SampleMetrics>& samples) {
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (samples[a].ssim != samples[b].ssim) return samples[a].ssim < samples[b].ssim;
    if (samples[a].mse != samples[b].mse) return samples[a].mse > samples[b].mse;
    return samples[a].id < samples[b].id;
  });
  return idx;
}

EvalReport evaluate(const Predictor& predict, const std::vector<EvalSample>& samples, const EvaluateOptions& opt) {
  if (samples.empty()) throw InputError("evaluate: empty validation set");
  EvalReport report;
  std::vector<RgbImage> predictions;
  predictions.reserve(samples.size());
  for (const auto& s : samples) {
    const auto t0 = std::chrono::steady_clock::now();
    RgbImage pred = predict(s.plan);
    const auto t1 = std::chrono::steady_clock::now();
    if (pred.width != s.ground_truth.width || pred.height != s.ground_truth.height) {
      throw InputError("evaluate: prediction size differs from ground truth for sample " + s.id);
    }
    const Field gt_luma = to_luma(s.ground_truth), pred_luma = to_luma(pred);
    SampleMetrics m;
    m.id = s.id;
    m.mse = mse(gt_luma, pred_luma);
    m.ssim = ssim(gt_luma, pred_luma);
    m.latency_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    const Field gt_db = decode_noise(s.ground_truth), pred_db = decode_noise(pred);
    double abs_sum = 0.0;
    for (std::size_t i = 0; i < gt_db.data.size(); ++i) abs_sum += std::abs(gt_db.data[i] - pred_db.data[i]);
    m.db_mae = abs_sum / static_cast<double>(gt_db.data.size());
    report.samples.push_back(std::move(m));
    predictions.push_back(std::move(pred));
  }

  const auto column = [&](auto member) {
    std::vector<double> v;
    for (const auto& s : report.samples) v.push_back(s.*member);
    return v;
  };
  report.mse = summarize(column(&SampleMetrics::mse));
  report.ssim = summarize(column(&SampleMetrics::ssim));
  report.latency_ms = summarize(column(&SampleMetrics::latency_ms));
  report.db_mae = summarize(column(&SampleMetrics::db_mae));
  report.mse_hist = histogram(column(&SampleMetrics::mse), 0.0, 0.5, opt.histogram_bins);
  report.ssim_hist = histogram(column(&SampleMetrics::ssim), 0.0, 1.0, opt.histogram_bins);
  report.predict_ms = report.latency_ms.mean;

  const auto order = worst_order(report.samples);
  for (std::size_t rank = 0; rank < std::min(opt.worst_k, order.size()); ++rank) {
    const auto i = order[rank];
    char stem[32];
    std::snprintf(stem, sizeof(stem), "worst/%04zu", rank);
    WorstCase w{report.samples[i].id, report.samples[i].mse, report.samples[i].ssim,
                std::string(stem) + "_gt.png", std::string(stem) + "_pred.png", std::string(stem) + "_err.png"};
    if (!opt.out_dir.empty()) {
      write_png(samples[i].ground_truth, opt.out_dir / w.gt_path);
      write_png(predictions[i], opt.out_dir / w.pred_path);
      write_png(error_map(samples[i].ground_truth, predictions[i]), opt.out_dir / w.err_path);
    }
    report.worst.push_back(std::move(w));
  }
  if (!opt.out_dir.empty()) write_report(report, opt.out_dir);
  return report;
}

namespace {

nlohmann::ordered_json summary_json(const Summary& s) {
  return {{"mean", s.mean}, {"std", s.stddev}, {"median", s.median}, {"min", s.min}, {"max", s.max}};
}

}  // namespace

void write_report(const EvalReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json j;
  j["count"] = report.samples.size();
  j["mse"] = summary_json(report.mse);
  j["ssim"] = summary_json(report.ssim);
  j["db_mae"] = summary_json(report.db_mae);
  j["latency_ms"] = summary_json(report.latency_ms);
  j["timing"] = {{"predict_ms", report.predict_ms}, {"simulate_ms", report.simulate_ms}};
  auto worst = nlohmann::ordered_json::array();
  for (const auto& w : report.worst) {
    worst.push_back({{"id", w.id}, {"mse", w.mse}, {"ssim", w.ssim}, {"gt", w.gt_path}, {"pred", w.pred_path},
                     {"err", w.err_path}});
  }
  j["worst"] = std::move(worst);
  write_file_atomic(dir / "report.json", j.dump(2) + "\n");

  std::string csv = "id,mse,ssim,latency_ms,db_mae\n";
  char line[256];
  for (const auto& s : report.samples) {
    std::snprintf(line, sizeof(line), ",%.17g,%.17g,%.6f,%.17g\n", s.mse, s.ssim, s.latency_ms, s.db_mae);
    csv += s.id + line;
  }
  write_file_atomic(dir / "samples.csv", csv);

  std::string hist = "metric,bin_lo,bin_hi,count\n";
  const auto emit = [&](const char* name, const Histogram& h) {
    const double width = (h.hi - h.lo) / static_cast<double>(h.counts.size());
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
      std::snprintf(line, sizeof(line), "%s,%.6g,%.6g,%zu\n", name, h.lo + width * static_cast<double>(b),
                    h.lo + width * static_cast<double>(b + 1), h.counts[b]);
      hist += line;
    }
  };
  emit("mse", report.mse_hist);
  emit("ssim", report.ssim_hist);
  write_file_atomic(dir / "histogram.csv", hist);
}

}  // namespace noisemap
