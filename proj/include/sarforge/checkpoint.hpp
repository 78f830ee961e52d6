#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "sarforge/binio.hpp"
#include "sarforge/optim.hpp"
#include "sarforge/unet.hpp"

namespace sarforge {

// Network weights plus optimizer state, bitwise round-trippable.
//
// Layout (little-endian): magic "SARW", version u16; arch depth/base/in/out
// u32 each; optimizer kind u8 (0 none, 1 sgd, 2 adam); step_count u64;
// epoch u32; rng_seed u64; tensor count u32; per tensor name (u16 length +
// bytes), ndim u8, dims u32 each, f32 payload; optimizer state tensors
// follow as bare f32 payloads in parameter order (velocity for sgd, all
// first moments then all second moments for adam).

inline constexpr char kCheckpointMagic[4] = {'S', 'A', 'R', 'W'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

enum class OptimizerKind : std::uint8_t { kNone = 0, kSgd = 1, kAdam = 2 };

struct Checkpoint {
  UNetConfig config;
  ParamSet<float> params;
  OptimizerKind opt_kind = OptimizerKind::kNone;
  std::vector<Tensor<float>> opt_m;  // sgd velocity lives here
  std::vector<Tensor<float>> opt_v;
  std::uint64_t step_count = 0;
  std::uint32_t epoch = 0;
  std::uint64_t rng_seed = 0;
};

inline void save_checkpoint(const Checkpoint& cp, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SpecError("save_checkpoint: cannot open '" + path + "'");
  ByteWriter w(out);
  w.bytes(kCheckpointMagic, 4);
  w.u16(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(cp.config.depth));
  w.u32(static_cast<std::uint32_t>(cp.config.base_channels));
  w.u32(static_cast<std::uint32_t>(cp.config.in_channels));
  w.u32(static_cast<std::uint32_t>(cp.config.out_channels));
  w.u8(static_cast<std::uint8_t>(cp.opt_kind));
  w.u64(cp.step_count);
  w.u32(cp.epoch);
  w.u64(cp.rng_seed);
  w.u32(static_cast<std::uint32_t>(cp.params.tensors.size()));
  for (std::size_t i = 0; i < cp.params.tensors.size(); ++i) {
    const std::string& name = cp.params.shapes[i].name;
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.bytes(name.data(), name.size());
    const auto& t = cp.params.tensors[i];
    w.u8(static_cast<std::uint8_t>(t.shape.size()));
    for (int d : t.shape) w.u32(static_cast<std::uint32_t>(d));
    for (float v : t.data) w.f32(v);
  }
  for (const auto& t : cp.opt_m)
    for (float v : t.data) w.f32(v);
  for (const auto& t : cp.opt_v)
    for (float v : t.data) w.f32(v);
  out.flush();
  if (!out) throw SpecError("save_checkpoint: write failed for '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpecError("load_checkpoint: cannot open '" + path + "'");
  ByteReader r(in, path);

  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0) r.fail("bad magic, not a checkpoint");
  if (r.u16() != kCheckpointVersion) r.fail("unsupported checkpoint version");

  Checkpoint cp;
  cp.config.depth = static_cast<int>(r.u32());
  cp.config.base_channels = static_cast<int>(r.u32());
  cp.config.in_channels = static_cast<int>(r.u32());
  cp.config.out_channels = static_cast<int>(r.u32());
  cp.opt_kind = static_cast<OptimizerKind>(r.u8());
  cp.step_count = r.u64();
  cp.epoch = r.u32();
  cp.rng_seed = r.u64();

  cp.params = ParamSet<float>::zeros(cp.config);
  const std::uint32_t count = r.u32();
  if (count != cp.params.tensors.size())
    r.fail("tensor count " + std::to_string(count) + " does not match the declared arch");
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t len = r.u16();
    std::string name(len, '\0');
    r.bytes(name.data(), len);
    if (name != cp.params.shapes[i].name)
      r.fail("tensor '" + name + "' where '" + cp.params.shapes[i].name + "' was expected");
    const int ndim = r.u8();
    std::vector<int> dims(static_cast<std::size_t>(ndim));
    for (auto& d : dims) d = static_cast<int>(r.u32());
    if (dims != cp.params.shapes[i].dims)
      r.fail("tensor '" + name + "' has shape " + shape_string(dims) + ", expected " +
             shape_string(cp.params.shapes[i].dims));
    for (auto& v : cp.params.tensors[i].data) v = r.f32();
  }

  const int state_sets = cp.opt_kind == OptimizerKind::kNone ? 0
                         : cp.opt_kind == OptimizerKind::kSgd ? 1
                                                              : 2;
  if (state_sets >= 1) {
    for (const auto& t : cp.params.tensors) {
      cp.opt_m.emplace_back(t.shape);
      for (auto& v : cp.opt_m.back().data) v = r.f32();
    }
  }
  if (state_sets == 2) {
    for (const auto& t : cp.params.tensors) {
      cp.opt_v.emplace_back(t.shape);
      for (auto& v : cp.opt_v.back().data) v = r.f32();
    }
  }
  if (!r.at_eof()) r.fail("trailing data after checkpoint payload");
  return cp;
}

// Load with an architecture requirement; mismatches are reported tensor by
// tensor so incompatible runs are diagnosable.
inline Checkpoint load_checkpoint(const std::string& path, const UNetConfig& expect) {
  Checkpoint cp = load_checkpoint(path);
  const auto want = unet_param_shapes(expect);
  const auto& have = cp.params.shapes;
  std::string mismatches;
  const std::size_t n = std::max(want.size(), have.size());
  for (std::size_t i = 0; i < n; ++i) {
    const std::string w = i < want.size() ? want[i].name + shape_string(want[i].dims) : "(none)";
    const std::string h = i < have.size() ? have[i].name + shape_string(have[i].dims) : "(none)";
    if (w != h) mismatches += "\n  expected " + w + ", found " + h;
  }
  if (!mismatches.empty())
    throw SpecError("checkpoint '" + path + "' is incompatible with the requested arch:" +
                    mismatches);
  return cp;
}

}  // namespace sarforge
