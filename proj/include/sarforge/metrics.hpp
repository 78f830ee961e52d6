#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "sarforge/common.hpp"
#include "sarforge/dataset.hpp"
#include "sarforge/tensor.hpp"
#include "sarforge/unet.hpp"

namespace sarforge {

// quantitative bands reported against (peak-normalized error / similarity)
inline constexpr double kRmseBandPct = 11.0;
inline constexpr double kSsimBand = 0.84;

// 100 * sqrt(mean((pred-truth)^2)) / max(truth), over the full raster.
inline double rmse_pct(const std::vector<float>& pred, const std::vector<float>& truth) {
  if (pred.size() != truth.size())
    throw ShapeError("rmse_pct: size mismatch {" + std::to_string(pred.size()) + "} vs {" +
                     std::to_string(truth.size()) + "}");
  double max_t = 0.0;
  for (float v : truth) max_t = std::max(max_t, static_cast<double>(v));
  if (max_t <= 0.0) throw MetricError("rmse_pct: all-zero ground truth");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred[i]) - static_cast<double>(truth[i]);
    acc += d * d;
  }
  return 100.0 * std::sqrt(acc / static_cast<double>(pred.size())) / max_t;
}

namespace detail {

inline const std::vector<double>& ssim_window() {
  // 11x11 Gaussian, sigma 1.5, normalized to sum 1
  static const std::vector<double> w = [] {
    std::vector<double> g(121);
    double sum = 0.0;
    for (int y = -5; y <= 5; ++y)
      for (int x = -5; x <= 5; ++x) {
        const double v = std::exp(-(x * x + y * y) / (2.0 * 1.5 * 1.5));
        g[static_cast<std::size_t>((y + 5) * 11 + (x + 5))] = v;
        sum += v;
      }
    for (auto& v : g) v /= sum;
    return g;
  }();
  return w;
}

}  // namespace detail

// Mean SSIM over valid 11x11 Gaussian-weighted windows with the usual
// constants C1=(0.01 L)^2, C2=(0.03 L)^2. The dynamic range L is explicit;
// callers pass max(truth) in the evaluation path. mask, when given,
// restricts the mean to windows whose center is on the mask.
inline double ssim(const std::vector<float>& a, const std::vector<float>& b, int height,
                   int width, double dynamic_range,
                   const std::vector<float>* center_mask = nullptr) {
  if (a.size() != b.size() ||
      a.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width))
    throw ShapeError("ssim: size mismatch {" + std::to_string(a.size()) + "} vs {" +
                     std::to_string(b.size()) + "}");
  if (height < 11 || width < 11)
    throw MetricError("ssim: image smaller than the 11x11 window");
  if (dynamic_range <= 0.0) throw MetricError("ssim: dynamic range must be positive");

  const double c1 = (0.01 * dynamic_range) * (0.01 * dynamic_range);
  const double c2 = (0.03 * dynamic_range) * (0.03 * dynamic_range);
  const auto& win = detail::ssim_window();

  double acc = 0.0;
  std::size_t count = 0;
  for (int cy = 5; cy < height - 5; ++cy)
    for (int cx = 5; cx < width - 5; ++cx) {
      if (center_mask &&
          (*center_mask)[static_cast<std::size_t>(cy) * width + cx] == 0.0f)
        continue;
      double mu_a = 0.0, mu_b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
      std::size_t wi = 0;
      for (int dy = -5; dy <= 5; ++dy) {
        const std::size_t row = static_cast<std::size_t>(cy + dy) * width + (cx - 5);
        for (int dx = 0; dx < 11; ++dx, ++wi) {
          const double w = win[wi];
          const double va = a[row + static_cast<std::size_t>(dx)];
          const double vb = b[row + static_cast<std::size_t>(dx)];
          mu_a += w * va;
          mu_b += w * vb;
          aa += w * va * va;
          bb += w * vb * vb;
          ab += w * va * vb;
        }
      }
      const double var_a = aa - mu_a * mu_a;
      const double var_b = bb - mu_b * mu_b;
      const double cov = ab - mu_a * mu_b;
      const double s = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                       ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
      acc += s;
      ++count;
    }
  if (count == 0) throw MetricError("ssim: no windows to evaluate");
  return acc / static_cast<double>(count);
}

inline double ssim(const std::vector<float>& pred, const std::vector<float>& truth, int height,
                   int width) {
  double max_t = 0.0;
  for (float v : truth) max_t = std::max(max_t, static_cast<double>(v));
  return ssim(pred, truth, height, width, max_t);
}

struct SampleMetrics {
  int sample_id = 0;
  double rmse_pct = 0.0;
  double ssim = 0.0;
  bool flagged = false;  // fails either band
};

struct MetricsReport {
  std::vector<SampleMetrics> records;
  double mean_rmse_pct = 0.0;
  double max_rmse_pct = 0.0;
  double mean_ssim = 0.0;
  double min_ssim = 0.0;
  bool rmse_band_pass = false;  // mean < 11%
  bool ssim_band_pass = false;  // mean > 0.84
};

inline std::vector<float> clamp01(std::vector<float> v) {
  for (auto& x : v) x = std::min(1.0f, std::max(0.0f, x));
  return v;
}

inline std::vector<float> predict_sample(const ParamSet<float>& params, const Sample& s) {
  Tensor<float> in({1, s.height, s.width});
  in.data = s.input;
  return clamp01(unet_forward(params, in).data);
}

// Per-sample percent-RMSE and SSIM of clamped predictions over the test
// split, plus the aggregates the quantitative bands are judged on.
inline MetricsReport evaluate_split(const ParamSet<float>& params, const Dataset& ds,
                                    const std::vector<int>& test_indices,
                                    bool mask_only = false) {
  if (test_indices.empty()) throw SpecError("evaluate: empty test split");

  MetricsReport report;
  double rmse_acc = 0.0, ssim_acc = 0.0;
  for (int idx : test_indices) {
    if (idx < 0 || idx >= static_cast<int>(ds.samples.size()))
      throw SpecError("evaluate: sample index " + std::to_string(idx) + " out of range");
    const Sample& s = ds.samples[static_cast<std::size_t>(idx)];
    const auto pred = predict_sample(params, s);

    SampleMetrics m;
    m.sample_id = idx;
    if (mask_only) {
      // restrict the error to on-mask cells; input is nonzero exactly there
      double max_t = 0.0, acc = 0.0;
      std::size_t n_mask = 0;
      for (std::size_t i = 0; i < s.target.size(); ++i)
        max_t = std::max(max_t, static_cast<double>(s.target[i]));
      if (max_t <= 0.0) throw MetricError("rmse_pct: all-zero ground truth");
      for (std::size_t i = 0; i < s.target.size(); ++i) {
        if (s.input[i] == 0.0f) continue;
        const double d = static_cast<double>(pred[i]) - static_cast<double>(s.target[i]);
        acc += d * d;
        ++n_mask;
      }
      if (n_mask == 0) throw MetricError("rmse_pct: empty mask");
      m.rmse_pct = 100.0 * std::sqrt(acc / static_cast<double>(n_mask)) / max_t;
      m.ssim = ssim(pred, s.target, s.height, s.width, max_t, &s.input);
    } else {
      m.rmse_pct = rmse_pct(pred, s.target);
      m.ssim = ssim(pred, s.target, s.height, s.width);
    }
    m.flagged = !(m.rmse_pct < kRmseBandPct && m.ssim > kSsimBand);

    rmse_acc += m.rmse_pct;
    ssim_acc += m.ssim;
    report.max_rmse_pct = std::max(report.max_rmse_pct, m.rmse_pct);
    report.min_ssim = report.records.empty() ? m.ssim : std::min(report.min_ssim, m.ssim);
    report.records.push_back(m);
  }
  report.mean_rmse_pct = rmse_acc / static_cast<double>(report.records.size());
  report.mean_ssim = ssim_acc / static_cast<double>(report.records.size());
  report.rmse_band_pass = report.mean_rmse_pct < kRmseBandPct;
  report.ssim_band_pass = report.mean_ssim > kSsimBand;
  return report;
}

}  // namespace sarforge
