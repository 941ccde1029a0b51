#include <algorithm>
#include <cmath>
#include <numeric>

#include "noisemap/errors.hpp"
#include "noisemap/metrics.hpp"

namespace noisemap {

Field to_luma(const RgbImage& img) {
  Field f{img.width, img.height, std::vector<double>(img.width * img.height)};
  for (std::size_t i = 0; i < f.data.size(); ++i) {
    const Rgb c = img.get(i);
    f.data[i] = (0.299 * c.r + 0.587 * c.g + 0.114 * c.b) / 255.0;
  }
  return f;
}

namespace {

void require_same_dims(const Field& a, const Field& b, const char* what) {
  if (a.width != b.width || a.height != b.height) {
    throw InputError(std::string(what) + ": dimension mismatch " + std::to_string(a.width) + "x" +
                     std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" + std::to_string(b.height));
  }
}

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(size));
  const double c = (size - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    w[static_cast<std::size_t>(i)] = std::exp(-((i - c) * (i - c)) / (2.0 * sigma * sigma));
    sum += w[static_cast<std::size_t>(i)];
  }
  for (auto& v : w) v /= sum;
  return w;
}

/// Separable "valid" filtering: output is (h - k + 1) x (w - k + 1).
std::vector<double> filter_valid(const std::vector<double>& img, std::size_t w, std::size_t h,
                                 const std::vector<double>& k) {
  const std::size_t n = k.size(), ow = w - n + 1, oh = h - n + 1;
  std::vector<double> tmp(h * ow);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < ow; ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += k[i] * img[r * w + c + i];
      tmp[r * ow + c] = s;
    }
  }
  std::vector<double> out(oh * ow);
  for (std::size_t r = 0; r < oh; ++r) {
    for (std::size_t c = 0; c < ow; ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += k[i] * tmp[(r + i) * ow + c];
      out[r * ow + c] = s;
    }
  }
  return out;
}

}  // namespace

double mse(const Field& a, const Field& b) {
  require_same_dims(a, b, "mse");
  if (a.data.empty()) throw InputError("mse: empty field");
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    s += d * d;
  }
  return s / static_cast<double>(a.data.size());
}

double ssim(const Field& a, const Field& b, const SsimOptions& opt) {
  require_same_dims(a, b, "ssim");
  const auto win = static_cast<std::size_t>(opt.window);
  if (a.width < win || a.height < win) throw InputError("ssim: image smaller than the window");

  const auto k = gaussian_window(opt.window, opt.sigma);
  const double c1 = std::pow(opt.k1 * opt.dynamic_range, 2);
  const double c2 = std::pow(opt.k2 * opt.dynamic_range, 2);
  const std::size_t n = a.data.size();
  std::vector<double> aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    aa[i] = a.data[i] * a.data[i];
    bb[i] = b.data[i] * b.data[i];
    ab[i] = a.data[i] * b.data[i];
  }
  const auto mu_a = filter_valid(a.data, a.width, a.height, k);
  const auto mu_b = filter_valid(b.data, a.width, a.height, k);
  const auto e_aa = filter_valid(aa, a.width, a.height, k);
  const auto e_bb = filter_valid(bb, a.width, a.height, k);
  const auto e_ab = filter_valid(ab, a.width, a.height, k);

  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double var_a = e_aa[i] - ma * ma;
    const double var_b = e_bb[i] - mb * mb;
    const double cov = e_ab[i] - ma * mb;
    total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

GrayImage error_map(const RgbImage& ground_truth, const RgbImage& predicted) {
  const Field a = to_luma(ground_truth), b = to_luma(predicted);
  require_same_dims(a, b, "error_map");
  GrayImage out{a.width, a.height, std::vector<std::uint8_t>(a.data.size())};
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    out.data[i] = static_cast<std::uint8_t>(std::lround(std::min(1.0, std::abs(a.data[i] - b.data[i])) * 255.0));
  }
  return out;
}

Summary summarize(std::vector<double> values) {
  Summary s;
  if (values.empty()) return s;
  // Sorted accumulation makes the aggregates independent of input order.
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / n);
  const std::size_t m = values.size() / 2;
  s.median = values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
  s.min = values.front();
  s.max = values.back();
  return s;
}

Histogram histogram(const std::vector<double>& values, double lo, double hi, std::size_t bins) {
  Histogram h{lo, hi, std::vector<std::size_t>(bins, 0)};
  for (double v : values) {
    auto b = static_cast<std::int64_t>(std::floor((v - lo) / (hi - lo) * static_cast<double>(bins)));
    b = std::clamp<std::int64_t>(b, 0, static_cast<std::int64_t>(bins) - 1);
    ++h.counts[static_cast<std::size_t>(b)];
  }
  return h;
}

}  // namespace noisemap
