#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "sarforge/binio.hpp"
#include "sarforge/common.hpp"
#include "sarforge/emfield.hpp"
#include "sarforge/sar.hpp"

namespace sarforge {

struct SampleMeta {
  double offset_x = 0.0;
  double offset_y = 0.0;
  std::uint64_t phantom_seed = 0;
  double norm_factor = 0.0;  // W/kg mapped to target value 1
  FieldTag field_tag = FieldTag::k3T;
};

// One (input, target) training pair: input is the tissue mask weighted by
// the unloaded B1 map, target the 1g-averaged SAR, both divided by their
// own maxima.
struct Sample {
  int height = 0;
  int width = 0;
  std::vector<float> input;   // row-major, [0,1], 0 off-mask
  std::vector<float> target;  // row-major, [0,1]
  SampleMeta meta;
};

enum class SampleReject { kNone, kZeroInput, kZeroTarget };

inline const char* reject_name(SampleReject r) {
  switch (r) {
    case SampleReject::kZeroInput: return "zero-input";
    case SampleReject::kZeroTarget: return "zero-target";
    default: return "none";
  }
}

struct BuiltSample {
  std::optional<Sample> sample;
  SampleReject reject = SampleReject::kNone;
};

inline BuiltSample build_sample(const TissueGrid& placed, const Placement& placement,
                                const FieldSolution& solution, const SarMap& sar,
                                std::uint64_t phantom_seed) {
  require_same_shape(solution.b1_unloaded, placed.classes, "build_sample");
  require_same_shape(sar.averaged_1g, placed.classes, "build_sample");

  const std::size_t n = placed.classes.size();
  std::vector<double> input(n, 0.0);
  double input_max = 0.0, target_max = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (placed.classes.data[i] != kBackground)
      input[i] = solution.b1_unloaded.data[i];
    input_max = std::max(input_max, input[i]);
    target_max = std::max(target_max, sar.averaged_1g.data[i]);
  }
  if (target_max <= 0.0) return {std::nullopt, SampleReject::kZeroTarget};
  if (input_max <= 0.0) return {std::nullopt, SampleReject::kZeroInput};

  Sample s;
  s.height = placed.height;
  s.width = placed.width;
  s.input.resize(n);
  s.target.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.input[i] = static_cast<float>(input[i] / input_max);
    s.target[i] = static_cast<float>(sar.averaged_1g.data[i] / target_max);
  }
  s.meta = {placement.offset_x, placement.offset_y, phantom_seed, target_max,
            solution.frequency_mhz == field_frequency_mhz(FieldTag::k7T) ? FieldTag::k7T
                                                                         : FieldTag::k3T};
  return {std::move(s), SampleReject::kNone};
}

struct Dataset {
  int height = 0;
  int width = 0;
  std::vector<Sample> samples;
};

// ---- train/val/test split ----------------------------------------------

struct SplitFractions {
  // rationals so the counts are exact integer arithmetic
  std::uint64_t train_num = 5, train_den = 7;
  std::uint64_t val_num = 4080, val_den = 22848;
};

struct SplitIndex {
  std::vector<int> train, val, test;
};

inline SplitIndex split(int n, const SplitFractions& f, std::uint64_t seed) {
  if (n < 3) throw SpecError("split: need at least 3 samples");
  const auto un = static_cast<std::uint64_t>(n);
  const int n_train = static_cast<int>(un * f.train_num / f.train_den);
  const int n_val = static_cast<int>(un * f.val_num / f.val_den);
  const int n_test = n - n_train - n_val;
  if (n_train <= 0 || n_val <= 0 || n_test <= 0)
    throw SpecError("split: a split is empty for n=" + std::to_string(n));

  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i)
    std::swap(order[i], order[rng.uniform_int(0, i)]);

  SplitIndex idx;
  idx.train.assign(order.begin(), order.begin() + n_train);
  idx.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  idx.test.assign(order.begin() + n_train + n_val, order.end());
  std::sort(idx.train.begin(), idx.train.end());
  std::sort(idx.val.begin(), idx.val.end());
  std::sort(idx.test.begin(), idx.test.end());
  return idx;
}

// ---- binary container ----------------------------------------------------
//
// Layout (little-endian): magic "SARD", version u16, sample_count u32,
// height u32, width u32; then per sample the meta record (offset_x f64,
// offset_y f64, phantom_seed u64, norm_factor f64, field_tag u8) followed
// by the input and target rasters as row-major f32.

inline constexpr char kDatasetMagic[4] = {'S', 'A', 'R', 'D'};
inline constexpr std::uint16_t kDatasetVersion = 1;

inline void write_dataset(const Dataset& ds, const std::string& path) {
  if (ds.samples.empty()) throw SpecError("write_dataset: no samples");
  for (const auto& s : ds.samples)
    if (s.height != ds.height || s.width != ds.width)
      throw SpecError("write_dataset: sample raster shape mismatch");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw SpecError("write_dataset: cannot open '" + path + "'");
  ByteWriter w(out);
  w.bytes(kDatasetMagic, 4);
  w.u16(kDatasetVersion);
  w.u32(static_cast<std::uint32_t>(ds.samples.size()));
  w.u32(static_cast<std::uint32_t>(ds.height));
  w.u32(static_cast<std::uint32_t>(ds.width));
  for (const auto& s : ds.samples) {
    w.f64(s.meta.offset_x);
    w.f64(s.meta.offset_y);
    w.u64(s.meta.phantom_seed);
    w.f64(s.meta.norm_factor);
    w.u8(static_cast<std::uint8_t>(s.meta.field_tag));
    for (float v : s.input) w.f32(v);
    for (float v : s.target) w.f32(v);
  }
  out.flush();
  if (!out) throw SpecError("write_dataset: write failed for '" + path + "'");
}

inline Dataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpecError("read_dataset: cannot open '" + path + "'");
  ByteReader r(in, path);

  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kDatasetMagic, 4) != 0) r.fail("bad magic, not a dataset file");
  const std::uint16_t version = r.u16();
  if (version != kDatasetVersion)
    r.fail("unsupported dataset version " + std::to_string(version));
  const std::uint32_t count = r.u32();
  Dataset ds;
  ds.height = static_cast<int>(r.u32());
  ds.width = static_cast<int>(r.u32());
  if (ds.height <= 0 || ds.width <= 0) r.fail("bad raster dimensions");

  const std::size_t hw = static_cast<std::size_t>(ds.height) * ds.width;
  ds.samples.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Sample& s = ds.samples[i];
    s.height = ds.height;
    s.width = ds.width;
    s.meta.offset_x = r.f64();
    s.meta.offset_y = r.f64();
    s.meta.phantom_seed = r.u64();
    s.meta.norm_factor = r.f64();
    const std::uint8_t tag = r.u8();
    if (tag > 1) r.fail("bad field tag " + std::to_string(tag));
    s.meta.field_tag = static_cast<FieldTag>(tag);
    s.input.resize(hw);
    s.target.resize(hw);
    for (auto& v : s.input) v = r.f32();
    for (auto& v : s.target) v = r.f32();
  }
  if (!r.at_eof()) r.fail("trailing data after declared sample count");
  return ds;
}

}  // namespace sarforge
