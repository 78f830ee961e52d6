#pragma once

#include <algorithm>
#include <cstring>
#include <vector>

#include "sarforge/gemm.hpp"
#include "sarforge/tensor.hpp"

namespace sarforge {
namespace detail {

// col[(c*k+ky)*k+kx][y*W+x] = x_padded, same (zero) padding, pad = k/2
template <typename T>
void im2col(const Tensor<T>& x, int k, std::vector<T>& col) {
  const int c_in = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int pad = k / 2;
  col.assign(static_cast<std::size_t>(c_in) * k * k * h * w, T(0));
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int c = 0; c < c_in; ++c) {
    const T* src = x.data.data() + static_cast<std::size_t>(c) * plane;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* dst = col.data() + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * plane;
        const int dy = ky - pad, dx = kx - pad;
        const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
        for (int y = 0; y < h; ++y) {
          const int sy = y + dy;
          if (sy < 0 || sy >= h || x0 >= x1) continue;
          std::memcpy(dst + static_cast<std::size_t>(y) * w + x0,
                      src + static_cast<std::size_t>(sy) * w + x0 + dx,
                      sizeof(T) * static_cast<std::size_t>(x1 - x0));
        }
      }
    }
  }
}

// scatter-add transpose of im2col
template <typename T>
void col2im(const std::vector<T>& col, int c_in, int h, int w, int k, Tensor<T>& x) {
  const int pad = k / 2;
  x.data.assign(x.numel(), T(0));
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int c = 0; c < c_in; ++c) {
    T* dst = x.data.data() + static_cast<std::size_t>(c) * plane;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* src = col.data() + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * plane;
        const int dy = ky - pad, dx = kx - pad;
        const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
        for (int y = 0; y < h; ++y) {
          const int sy = y + dy;
          if (sy < 0 || sy >= h || x0 >= x1) continue;
          T* drow = dst + static_cast<std::size_t>(sy) * w + x0 + dx;
          const T* srow = src + static_cast<std::size_t>(y) * w + x0;
          for (int i = 0; i < x1 - x0; ++i) drow[i] += srow[i];
        }
      }
    }
  }
}

template <typename T>
std::vector<T>& conv_scratch() {
  thread_local std::vector<T> buf;
  return buf;
}

}  // namespace detail

// 2D convolution with same padding via im2col + GEMM. weight {O,C,k,k},
// input {C,H,W}, output {O,H,W}; k is 1 or 3 here.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (x.shape.size() != 3 || weight.shape.size() != 4 || x.dim(0) != weight.dim(1))
    throw ShapeError("conv2d: shape mismatch " + shape_string(x.shape) + " vs " +
                     shape_string(weight.shape));
  const int c_out = weight.dim(0), c_in = x.dim(0), k = weight.dim(2);
  if (weight.dim(3) != k) throw ShapeError("conv2d: non-square kernel " + shape_string(weight.shape));
  require_shape(bias, {c_out}, "conv2d bias");
  const int h = x.dim(1), w = x.dim(2);
  const int hw = h * w;

  Tensor<T> out({c_out, h, w});
  if (k == 1) {
    gemm_nn(c_out, hw, c_in, weight.data.data(), x.data.data(), out.data.data());
  } else {
    auto& col = detail::conv_scratch<T>();
    detail::im2col(x, k, col);
    gemm_nn(c_out, hw, c_in * k * k, weight.data.data(), col.data(), out.data.data());
  }
  for (int o = 0; o < c_out; ++o) {
    T* plane = out.data.data() + static_cast<std::size_t>(o) * hw;
    const T b = bias.data[o];
    for (int i = 0; i < hw; ++i) plane[i] += b;
  }
  return out;
}

// Gradients of the convolution. d_weight/d_bias accumulate (+=) so batches
// can sum; d_input is overwritten and may be null when not needed.
template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& d_out,
                     Tensor<T>* d_input, Tensor<T>& d_weight, Tensor<T>& d_bias) {
  const int c_out = weight.dim(0), c_in = weight.dim(1), k = weight.dim(2);
  const int h = x.dim(1), w = x.dim(2);
  const int hw = h * w;
  require_shape(d_out, {c_out, h, w}, "conv2d_backward d_out");
  require_shape(d_weight, weight.shape, "conv2d_backward d_weight");
  require_shape(d_bias, {c_out}, "conv2d_backward d_bias");

  for (int o = 0; o < c_out; ++o) {
    const T* plane = d_out.data.data() + static_cast<std::size_t>(o) * hw;
    T acc(0);
    for (int i = 0; i < hw; ++i) acc += plane[i];
    d_bias.data[o] += acc;
  }

  if (k == 1) {
    gemm_nt(c_out, c_in, hw, d_out.data.data(), x.data.data(), d_weight.data.data(), true);
    if (d_input) {
      *d_input = Tensor<T>({c_in, h, w});
      gemm_tn(c_in, hw, c_out, weight.data.data(), d_out.data.data(), d_input->data.data());
    }
    return;
  }

  auto& col = detail::conv_scratch<T>();
  detail::im2col(x, k, col);
  gemm_nt(c_out, c_in * k * k, hw, d_out.data.data(), col.data(), d_weight.data.data(), true);

  if (d_input) {
    std::vector<T> d_col(static_cast<std::size_t>(c_in) * k * k * hw);
    gemm_tn(c_in * k * k, hw, c_out, weight.data.data(), d_out.data.data(), d_col.data());
    *d_input = Tensor<T>({c_in, h, w});
    detail::col2im(d_col, c_in, h, w, k, *d_input);
  }
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> out(x.shape);
  for (std::size_t i = 0; i < x.numel(); ++i) out.data[i] = x.data[i] > T(0) ? x.data[i] : T(0);
  return out;
}

// derivative at exactly zero is zero
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& pre, const Tensor<T>& d_out) {
  Tensor<T> dx(pre.shape);
  for (std::size_t i = 0; i < pre.numel(); ++i)
    dx.data[i] = pre.data[i] > T(0) ? d_out.data[i] : T(0);
  return dx;
}

// 2x2 max pooling, stride 2; argmax (flat input index) recorded for the
// backward pass. Ties keep the first element in scan order.
template <typename T>
Tensor<T> maxpool2(const Tensor<T>& x, std::vector<int>& argmax) {
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (h % 2 || w % 2) throw ShapeError("maxpool2: odd spatial size " + shape_string(x.shape));
  const int oh = h / 2, ow = w / 2;
  Tensor<T> out({c, oh, ow});
  argmax.resize(out.numel());
  for (int ci = 0; ci < c; ++ci) {
    const std::size_t in_base = static_cast<std::size_t>(ci) * h * w;
    for (int y = 0; y < oh; ++y)
      for (int xo = 0; xo < ow; ++xo) {
        int best_idx = static_cast<int>(in_base) + (2 * y) * w + 2 * xo;
        T best = x.data[static_cast<std::size_t>(best_idx)];
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const int idx = static_cast<int>(in_base) + (2 * y + dy) * w + (2 * xo + dx);
            const T v = x.data[static_cast<std::size_t>(idx)];
            if (v > best) {
              best = v;
              best_idx = idx;
            }
          }
        const std::size_t o = static_cast<std::size_t>(ci) * oh * ow +
                              static_cast<std::size_t>(y) * ow + xo;
        out.data[o] = best;
        argmax[o] = best_idx;
      }
  }
  return out;
}

template <typename T>
Tensor<T> maxpool2_backward(const std::vector<int>& argmax, const std::vector<int>& in_shape,
                            const Tensor<T>& d_out) {
  Tensor<T> dx(in_shape);
  for (std::size_t o = 0; o < d_out.numel(); ++o)
    dx.data[static_cast<std::size_t>(argmax[o])] += d_out.data[o];
  return dx;
}

// nearest-neighbor 2x upsampling
template <typename T>
Tensor<T> upsample2(const Tensor<T>& x) {
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor<T> out({c, 2 * h, 2 * w});
  for (int ci = 0; ci < c; ++ci)
    for (int y = 0; y < h; ++y) {
      const T* src = x.data.data() + (static_cast<std::size_t>(ci) * h + y) * w;
      for (int rep = 0; rep < 2; ++rep) {
        T* dst = out.data.data() +
                 (static_cast<std::size_t>(ci) * 2 * h + 2 * y + rep) * (2 * w);
        for (int xo = 0; xo < w; ++xo) {
          dst[2 * xo] = src[xo];
          dst[2 * xo + 1] = src[xo];
        }
      }
    }
  return out;
}

template <typename T>
Tensor<T> upsample2_backward(const Tensor<T>& d_out) {
  const int c = d_out.dim(0), h2 = d_out.dim(1), w2 = d_out.dim(2);
  Tensor<T> dx({c, h2 / 2, w2 / 2});
  for (int ci = 0; ci < c; ++ci)
    for (int y = 0; y < h2; ++y) {
      const T* src = d_out.data.data() + (static_cast<std::size_t>(ci) * h2 + y) * w2;
      T* dst = dx.data.data() + (static_cast<std::size_t>(ci) * (h2 / 2) + y / 2) * (w2 / 2);
      for (int xo = 0; xo < w2; ++xo) dst[xo / 2] += src[xo];
    }
  return dx;
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2))
    throw ShapeError("concat: shape mismatch " + shape_string(a.shape) + " vs " +
                     shape_string(b.shape));
  Tensor<T> out({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)});
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(a.numel()));
  return out;
}

template <typename T>
void split_channels(const Tensor<T>& d_cat, int c_first, Tensor<T>& d_a, Tensor<T>& d_b) {
  const int h = d_cat.dim(1), w = d_cat.dim(2);
  d_a = Tensor<T>({c_first, h, w});
  d_b = Tensor<T>({d_cat.dim(0) - c_first, h, w});
  std::copy(d_cat.data.begin(), d_cat.data.begin() + static_cast<std::ptrdiff_t>(d_a.numel()),
            d_a.data.begin());
  std::copy(d_cat.data.begin() + static_cast<std::ptrdiff_t>(d_a.numel()), d_cat.data.end(),
            d_b.data.begin());
}

}  // namespace sarforge
