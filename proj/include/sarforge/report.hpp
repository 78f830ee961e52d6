#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sarforge/common.hpp"
#include "sarforge/dataset.hpp"
#include "sarforge/metrics.hpp"

namespace sarforge {

inline std::string format_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

// 8-bit binary grayscale with plain-text header (PGM, P5). Values map
// linearly so that `scale_max` lands on pixel 255.
inline void write_pgm(const std::string& path, const std::vector<float>& values, int width,
                      int height, double scale_max) {
  if (scale_max <= 0.0) throw SpecError("write_pgm: scale_max must be positive");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SpecError("write_pgm: cannot open '" + path + "'");
  out << "P5\n" << width << " " << height << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(width));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double v = values[static_cast<std::size_t>(y) * width + x] / scale_max * 255.0;
      row[static_cast<std::size_t>(x)] =
          static_cast<unsigned char>(std::clamp(std::lround(v), 0l, 255l));
    }
    out.write(reinterpret_cast<const char*>(row.data()), width);
  }
  if (!out) throw SpecError("write_pgm: write failed for '" + path + "'");
}

struct PgmImage {
  int width = 0;
  int height = 0;
  std::vector<unsigned char> pixels;
};

inline PgmImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpecError("read_pgm: cannot open '" + path + "'");
  std::string magic;
  int maxval = 0;
  PgmImage img;
  in >> magic >> img.width >> img.height >> maxval;
  if (magic != "P5" || img.width <= 0 || img.height <= 0 || maxval != 255)
    throw FormatError("read_pgm: bad header in '" + path + "'", 0);
  in.get();  // single whitespace after maxval
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (static_cast<std::size_t>(in.gcount()) != img.pixels.size())
    throw FormatError("read_pgm: truncated pixel data in '" + path + "'",
                      static_cast<std::uint64_t>(in.gcount()));
  return img;
}

inline void write_report_csv(const MetricsReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SpecError("write_report_csv: cannot open '" + path + "'");
  out << "sample_id,rmse_pct,ssim,flagged\n";
  for (const auto& r : report.records)
    out << r.sample_id << "," << format_g(r.rmse_pct) << "," << format_g(r.ssim) << ","
        << (r.flagged ? 1 : 0) << "\n";
  if (!out) throw SpecError("write_report_csv: write failed for '" + path + "'");
}

// CSV plus grayscale triptychs (input / truth / prediction) for the first
// `triptychs` test samples; truth and prediction share the truth's maximum
// so hotspot intensity is comparable.
inline void emit_report(const MetricsReport& report, const ParamSet<float>& params,
                        const Dataset& ds, const std::string& out_dir, int triptychs = 4) {
  std::filesystem::create_directories(out_dir);
  write_report_csv(report, out_dir + "/report.csv");

  const int n = std::min<int>(triptychs, static_cast<int>(report.records.size()));
  for (int i = 0; i < n; ++i) {
    const int idx = report.records[static_cast<std::size_t>(i)].sample_id;
    const Sample& s = ds.samples[static_cast<std::size_t>(idx)];
    const auto pred = predict_sample(params, s);

    double max_in = 0.0, max_t = 0.0;
    for (float v : s.input) max_in = std::max(max_in, static_cast<double>(v));
    for (float v : s.target) max_t = std::max(max_t, static_cast<double>(v));
    const std::string stem = out_dir + "/sample_" + std::to_string(idx);
    write_pgm(stem + "_input.pgm", s.input, s.width, s.height, max_in > 0 ? max_in : 1.0);
    write_pgm(stem + "_truth.pgm", s.target, s.width, s.height, max_t > 0 ? max_t : 1.0);
    write_pgm(stem + "_pred.pgm", pred, s.width, s.height, max_t > 0 ? max_t : 1.0);
  }
}

}  // namespace sarforge
