#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "noisemap/image.hpp"

namespace noisemap {

/// (0.299 R + 0.587 G + 0.114 B) / 255 per pixel.
Field to_luma(const RgbImage& img);

/// Mean squared difference. Throws InputError on dimension mismatch.
double mse(const Field& a, const Field& b);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

/// Mean local SSIM over all fully-covered window positions (Gaussian window).
/// Throws InputError on dimension mismatch or images smaller than the window.
double ssim(const Field& a, const Field& b, const SsimOptions& opt = {});

/// |luma(gt) - luma(pred)| scaled to 0..255.
GrayImage error_map(const RgbImage& ground_truth, const RgbImage& predicted);

struct SampleMetrics {
  std::string id;
  double mse = 0.0;
  double ssim = 0.0;
  double latency_ms = 0.0;
  /// Mean absolute difference of the decoded levels, dB.
  double db_mae = 0.0;
};

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
};

Summary summarize(std::vector<double> values);

struct Histogram {
  double lo = 0.0, hi = 1.0;
  std::vector<std::size_t> counts;
};

/// Fixed-range histogram; values outside [lo, hi] land in the end bins.
Histogram histogram(const std::vector<double>& values, double lo, double hi, std::size_t bins);

struct EvalSample {
  std::string id;
  RgbImage plan;
  RgbImage ground_truth;
};

struct WorstCase {
  std::string id;
  double mse = 0.0;
  double ssim = 0.0;
  std::string gt_path, pred_path, err_path;  // relative to the report directory
};

struct EvalReport {
  std::vector<SampleMetrics> samples;  // input order
  Summary mse, ssim, latency_ms, db_mae;
  Histogram mse_hist, ssim_hist;
  std::vector<WorstCase> worst;  // ascending SSIM, ties by descending MSE
  /// Optional timing comparison against the simulator, milliseconds.
  double simulate_ms = 0.0;
  double predict_ms = 0.0;
};

using Predictor = std::function<RgbImage(const RgbImage& plan)>;

struct EvaluateOptions {
  std::size_t worst_k = 5;
  std::size_t histogram_bins = 20;
  /// When set, report.json, samples.csv, histogram.csv and worst/ are written here.
  std::filesystem::path out_dir;
};

/// Runs `predict` per sample and scores it on luma images. Throws InputError
/// for an empty set.
EvalReport evaluate(const Predictor& predict, const std::vector<EvalSample>& samples,
                    const EvaluateOptions& opt = {});

/// Orders sample indices for the worst-case listing.
std::vector<std::size_t> worst_order(const std::vector<SampleMetrics>& samples);

void write_report(const EvalReport& report, const std::filesystem::path& dir);

}  // namespace noisemap
