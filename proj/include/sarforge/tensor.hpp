#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "sarforge/common.hpp"

namespace sarforge {

// Dense row-major tensor. float for training, double for gradient checks.
template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(numel_of(shape), T(0));
  }

  static std::size_t numel_of(const std::vector<int>& s) {
    std::size_t n = 1;
    for (int d : s) n *= static_cast<std::size_t>(d);
    return n;
  }
  std::size_t numel() const { return data.size(); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

  bool same_shape(const std::vector<int>& s) const { return shape == s; }
};

inline std::string shape_string(const std::vector<int>& s) {
  std::string out = "{";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "}";
}

template <typename T>
void require_shape(const Tensor<T>& t, const std::vector<int>& expect, const char* where) {
  if (t.shape != expect)
    throw ShapeError(std::string(where) + ": shape mismatch " + shape_string(t.shape) +
                     " vs " + shape_string(expect));
}

template <typename T>
bool all_finite(const Tensor<T>& t) {
  for (T v : t.data)
    if (!std::isfinite(static_cast<double>(v))) return false;
  return true;
}

}  // namespace sarforge
