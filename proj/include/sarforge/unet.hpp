#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sarforge/common.hpp"
#include "sarforge/layers.hpp"
#include "sarforge/tensor.hpp"

namespace sarforge {

// Encoder-decoder with skip connections: per level two 3x3 conv+ReLU, 2x2
// max pool down, nearest-neighbor upsample + 3x3 conv up, channel
// concatenation skips, linear 1x1 output head.
struct UNetConfig {
  int depth = 3;
  int base_channels = 16;
  int in_channels = 1;
  int out_channels = 1;

  int level_channels(int level) const { return base_channels << level; }
};

inline void validate_config(const UNetConfig& cfg) {
  if (cfg.depth < 1 || cfg.base_channels < 1 || cfg.in_channels < 1 || cfg.out_channels < 1)
    throw SpecError("unet config: counts must be positive");
}

struct ParamShape {
  std::string name;
  std::vector<int> dims;
  int fan_in = 0;  // 0 marks a bias
};

inline std::vector<ParamShape> unet_param_shapes(const UNetConfig& cfg) {
  validate_config(cfg);
  std::vector<ParamShape> shapes;
  auto conv = [&](const std::string& name, int c_out, int c_in, int k) {
    shapes.push_back({name + ".weight", {c_out, c_in, k, k}, c_in * k * k});
    shapes.push_back({name + ".bias", {c_out}, 0});
  };

  int c_prev = cfg.in_channels;
  for (int l = 0; l < cfg.depth; ++l) {
    const int c = cfg.level_channels(l);
    conv("enc" + std::to_string(l) + ".conv1", c, c_prev, 3);
    conv("enc" + std::to_string(l) + ".conv2", c, c, 3);
    c_prev = c;
  }
  const int c_bott = cfg.level_channels(cfg.depth);
  conv("bottleneck.conv1", c_bott, c_prev, 3);
  conv("bottleneck.conv2", c_bott, c_bott, 3);
  for (int l = cfg.depth - 1; l >= 0; --l) {
    const int c = cfg.level_channels(l);
    const int c_below = cfg.level_channels(l + 1);
    conv("dec" + std::to_string(l) + ".up", c, c_below, 3);
    conv("dec" + std::to_string(l) + ".conv1", c, 2 * c, 3);  // skip concat doubles input
    conv("dec" + std::to_string(l) + ".conv2", c, c, 3);
  }
  conv("final", cfg.out_channels, cfg.base_channels, 1);
  return shapes;
}

template <typename T>
struct ParamSet {
  UNetConfig config;
  std::vector<ParamShape> shapes;
  std::vector<Tensor<T>> tensors;  // same order as shapes

  static ParamSet zeros(const UNetConfig& cfg) {
    ParamSet p;
    p.config = cfg;
    p.shapes = unet_param_shapes(cfg);
    p.tensors.reserve(p.shapes.size());
    for (const auto& s : p.shapes) p.tensors.emplace_back(s.dims);
    return p;
  }

  Tensor<T>& find(const std::string& name) {
    for (std::size_t i = 0; i < shapes.size(); ++i)
      if (shapes[i].name == name) return tensors[i];
    throw SpecError("unet params: no tensor named '" + name + "'");
  }
};

// He-normal draw: i.i.d. N(0, 2/fan_in); biases are zero-filled elsewhere.
template <typename T>
Tensor<T> he_init(const std::vector<int>& dims, int fan_in, Rng& rng) {
  if (fan_in < 1) throw SpecError("he_init: fan_in must be >= 1");
  Tensor<T> t(dims);
  const double stddev = std::sqrt(2.0 / fan_in);
  for (auto& v : t.data) v = static_cast<T>(stddev * rng.normal());
  return t;
}

template <typename T>
Tensor<T> he_init(const std::vector<int>& dims, int fan_in, std::uint64_t seed) {
  Rng rng(seed);
  return he_init<T>(dims, fan_in, rng);
}

template <typename T>
ParamSet<T> init_params(const UNetConfig& cfg, std::uint64_t seed) {
  ParamSet<T> p = ParamSet<T>::zeros(cfg);
  Rng rng(seed);
  for (std::size_t i = 0; i < p.shapes.size(); ++i)
    if (p.shapes[i].fan_in > 0) p.tensors[i] = he_init<T>(p.shapes[i].dims, p.shapes[i].fan_in, rng);
  return p;
}

namespace detail {

template <typename T>
struct ConvCache {
  Tensor<T> input;  // conv input, kept for the weight gradient
  Tensor<T> pre;    // pre-ReLU activation, kept for the ReLU mask
};

}  // namespace detail

template <typename T>
struct UNetCache {
  std::vector<detail::ConvCache<T>> conv;      // every conv+ReLU, forward order
  std::vector<std::vector<int>> pool_argmax;   // per encoder level
  std::vector<std::vector<int>> pool_in_shape;
  Tensor<T> final_input;
};

namespace detail {

template <typename T>
Tensor<T> conv_relu(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                    UNetCache<T>* cache) {
  Tensor<T> pre = conv2d_forward(x, w, b);
  Tensor<T> out = relu(pre);
  if (cache) cache->conv.push_back({x, std::move(pre)});
  return out;
}

}  // namespace detail

template <typename T>
Tensor<T> unet_forward(const ParamSet<T>& params, const Tensor<T>& input,
                       UNetCache<T>* cache = nullptr) {
  const UNetConfig& cfg = params.config;
  if (input.shape.size() != 3 || input.dim(0) != cfg.in_channels)
    throw ShapeError("unet: input shape mismatch " + shape_string(input.shape) + " vs {" +
                     std::to_string(cfg.in_channels) + ",H,W}");
  const int h = input.dim(1), w = input.dim(2);
  const int div = 1 << cfg.depth;
  if (h % div || w % div)
    throw ShapeError("unet: spatial size " + shape_string(input.shape) +
                     " vs a multiple of {" + std::to_string(div) + "}");

  std::size_t t = 0;
  auto next = [&]() -> const Tensor<T>& { return params.tensors[t++]; };

  Tensor<T> x = input;
  std::vector<Tensor<T>> skips;
  for (int l = 0; l < cfg.depth; ++l) {
    const Tensor<T>&w1 = next(), &b1 = next(), &w2 = next(), &b2 = next();
    x = detail::conv_relu(x, w1, b1, cache);
    x = detail::conv_relu(x, w2, b2, cache);
    skips.push_back(x);
    std::vector<int> argmax;
    std::vector<int> in_shape = x.shape;
    x = maxpool2(x, argmax);
    if (cache) {
      cache->pool_argmax.push_back(std::move(argmax));
      cache->pool_in_shape.push_back(std::move(in_shape));
    }
  }

  {
    const Tensor<T>&w1 = next(), &b1 = next(), &w2 = next(), &b2 = next();
    x = detail::conv_relu(x, w1, b1, cache);
    x = detail::conv_relu(x, w2, b2, cache);
  }
  if (x.dim(1) != h / div || x.dim(2) != w / div)
    throw ShapeError("unet: bottleneck shape " + shape_string(x.shape) + " vs expected {" +
                     std::to_string(h / div) + "," + std::to_string(w / div) + "}");

  for (int l = cfg.depth - 1; l >= 0; --l) {
    const Tensor<T>&wu = next(), &bu = next(), &w1 = next(), &b1 = next(), &w2 = next(),
                   &b2 = next();
    x = upsample2(x);
    x = detail::conv_relu(x, wu, bu, cache);
    x = concat_channels(skips[static_cast<std::size_t>(l)], x);
    x = detail::conv_relu(x, w1, b1, cache);
    x = detail::conv_relu(x, w2, b2, cache);
  }

  const Tensor<T>&wf = next(), &bf = next();
  if (cache) cache->final_input = x;
  return conv2d_forward(x, wf, bf);  // linear head
}

// mean squared error over all raster elements
template <typename T>
double mse_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  if (pred.shape != target.shape)
    throw ShapeError("mse: shape mismatch " + shape_string(pred.shape) + " vs " +
                     shape_string(target.shape));
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    const double d = static_cast<double>(pred.data[i]) - static_cast<double>(target.data[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(pred.numel());
}

template <typename T>
Tensor<T> mse_loss_grad(const Tensor<T>& pred, const Tensor<T>& target) {
  Tensor<T> g(pred.shape);
  const T scale = T(2) / static_cast<T>(pred.numel());
  for (std::size_t i = 0; i < pred.numel(); ++i)
    g.data[i] = scale * (pred.data[i] - target.data[i]);
  return g;
}

// Reverse pass mirroring unet_forward; parameter gradients accumulate into
// `grads` so per-sample calls sum over a batch.
template <typename T>
void unet_backward(const ParamSet<T>& params, const UNetCache<T>& cache,
                   const Tensor<T>& d_output, ParamSet<T>& grads) {
  const UNetConfig& cfg = params.config;
  std::size_t t = params.tensors.size();
  std::size_t c = cache.conv.size();

  auto conv_relu_back = [&](const Tensor<T>& d_out, bool need_dx) -> Tensor<T> {
    const detail::ConvCache<T>& cc = cache.conv[--c];
    const Tensor<T>& w = params.tensors[t - 2];
    Tensor<T>& dw = grads.tensors[t - 2];
    Tensor<T>& db = grads.tensors[t - 1];
    t -= 2;
    const Tensor<T> d_pre = relu_backward(cc.pre, d_out);
    Tensor<T> dx;
    conv2d_backward(cc.input, w, d_pre, need_dx ? &dx : nullptr, dw, db);
    return dx;
  };

  // final 1x1 linear conv
  Tensor<T> dx;
  {
    const Tensor<T>& wf = params.tensors[t - 2];
    Tensor<T>& dwf = grads.tensors[t - 2];
    Tensor<T>& dbf = grads.tensors[t - 1];
    t -= 2;
    conv2d_backward(cache.final_input, wf, d_output, &dx, dwf, dbf);
  }

  std::vector<Tensor<T>> d_skips(static_cast<std::size_t>(cfg.depth));
  for (int l = 0; l < cfg.depth; ++l) {
    dx = conv_relu_back(dx, true);  // conv2
    dx = conv_relu_back(dx, true);  // conv1
    Tensor<T> d_skip, d_up;
    split_channels(dx, cfg.level_channels(l), d_skip, d_up);
    d_skips[static_cast<std::size_t>(l)] = std::move(d_skip);
    dx = conv_relu_back(d_up, true);  // up conv
    dx = upsample2_backward(dx);
  }

  {
    dx = conv_relu_back(dx, true);
    dx = conv_relu_back(dx, true);
  }

  for (int l = cfg.depth - 1; l >= 0; --l) {
    dx = maxpool2_backward(cache.pool_argmax[static_cast<std::size_t>(l)],
                           cache.pool_in_shape[static_cast<std::size_t>(l)], dx);
    for (std::size_t i = 0; i < dx.numel(); ++i)
      dx.data[i] += d_skips[static_cast<std::size_t>(l)].data[i];
    dx = conv_relu_back(dx, true);   // conv2
    dx = conv_relu_back(dx, l > 0);  // conv1; the network-input grad is unused
  }
}

// forward + MSE + full backward; returns the loss
template <typename T>
double backward_mse(const ParamSet<T>& params, const Tensor<T>& input, const Tensor<T>& target,
                    ParamSet<T>& grads) {
  UNetCache<T> cache;
  const Tensor<T> pred = unet_forward(params, input, &cache);
  const double loss = mse_loss(pred, target);
  if (!std::isfinite(loss)) throw DivergenceError(-1, -1);
  unet_backward(params, cache, mse_loss_grad(pred, target), grads);
  return loss;
}

}  // namespace sarforge
